#include "spiritdiff/scores.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "spiritdiff/operators.hpp"
#include "spiritdiff/rng.hpp"

namespace spiritdiff {

CoilImage gaussian_score(const GaussianPrior &p, const SdeSchedule &sch, const CoilImage &x,
                         double t, const SensitivityMaps *s)
{
  check_same_shape(x, p.mean, "gaussian_score");
  const double denom = p.var + sigma2(sch, t);
  if (!(denom > 0.0)) throw std::invalid_argument("gaussian_score: prior variance must be positive");
  CoilImage d = x - p.mean;
  if (s) d = q_project(*s, d);
  return (-1.0 / denom) * d;
}

ScoreFn make_gaussian_score_fn(GaussianPrior p, SdeSchedule sch, const SensitivityMaps *s)
{
  return [p = std::move(p), sch, s](const CoilImage &x, double t) {
    return gaussian_score(p, sch, x, t, s);
  };
}

Index LinearScoreModel::bin_of(double t) const
{
  const Index nb = n_bins();
  if (nb < 1 || T <= t_min) throw std::invalid_argument("score model has no time bins");
  const auto k = static_cast<Index>(std::floor((t - t_min) / (T - t_min) * static_cast<double>(nb)));
  return std::clamp(k, Index{0}, nb - 1);
}

double LinearScoreModel::bin_center(Index k) const
{
  return t_min + (static_cast<double>(k) + 0.5) * (T - t_min) / static_cast<double>(n_bins());
}

CoilImage LinearScoreModel::score(const CoilImage &x, double t) const
{
  if (a.size() != b.size()) throw std::invalid_argument("score model coefficient tables disagree");
  check_same_shape(x, mean_est, "LinearScoreModel::score");
  const Index k = bin_of(t);
  CoilImage out = a[static_cast<size_t>(k)] * x;
  axpy(Cx(b[static_cast<size_t>(k)], 0.0), mean_est, out);
  return out;
}

ScoreFn LinearScoreModel::as_score_fn() const
{
  return [m = *this](const CoilImage &x, double t) { return m.score(x, t); };
}

double dsm_loss_with_noise(const LinearScoreModel &model, const std::vector<CoilImage> &batch,
                           double t, const SdeSchedule &sch, const SensitivityMaps *s,
                           const std::vector<CoilImage> &noise)
{
  if (batch.empty()) throw std::invalid_argument("dsm_loss: empty batch");
  if (noise.size() != batch.size())
    throw std::invalid_argument("dsm_loss: need one noise stack per sample");
  const double s2 = sigma2(sch, t);
  if (!(s2 > 0.0)) throw std::invalid_argument("dsm_loss: zero noise scale at this time");
  const double sig = std::sqrt(s2);

  double acc = 0.0;
  for (size_t i = 0; i < batch.size(); ++i) {
    check_same_shape(batch[i], noise[i], "dsm_loss");
    CoilImage qn = s ? q_project(*s, noise[i]) : noise[i];
    CoilImage xt = batch[i];
    axpy(Cx(sig, 0.0), qn, xt);
    // kernel score -q(xt - x0)/s2 collapses to -qn/sig: the projection is
    // idempotent, so it passes through the perturbation unchanged.
    CoilImage r = model.score(xt, t);
    axpy(Cx(1.0 / sig, 0.0), qn, r);
    acc += norm2_sq(r);
  }
  return s2 * acc / static_cast<double>(batch.size());
}

double dsm_loss(const LinearScoreModel &model, const std::vector<CoilImage> &batch, double t,
                const SdeSchedule &sch, const SensitivityMaps *s, Prng &rng)
{
  if (batch.empty()) throw std::invalid_argument("dsm_loss: empty batch");
  std::vector<CoilImage> noise;
  noise.reserve(batch.size());
  for (const auto &x : batch) noise.push_back(complex_noise(x.ncoils(), x.ny(), x.nx(), rng));
  return dsm_loss_with_noise(model, batch, t, sch, s, noise);
}

LinearScoreModel train_dsm(const std::vector<CoilImage> &data, const SdeSchedule &sch,
                           const SensitivityMaps *s, const TrainConfig &cfg)
{
  if (data.empty()) throw std::invalid_argument("train_dsm: empty training set");
  if (cfg.n_bins < 1) throw std::invalid_argument("train_dsm: need at least one time bin");
  if (cfg.epochs < 1) throw std::invalid_argument("train_dsm: need at least one epoch");
  if (!(cfg.t_min > 0.0) || cfg.t_min >= sch.T)
    throw std::invalid_argument("train_dsm: t_min must lie inside (0, T)");
  sch.validate();

  const Index nc = data[0].ncoils(), ny = data[0].ny(), nx = data[0].nx();
  for (const auto &x : data) check_same_shape(x, data[0], "train_dsm");

  LinearScoreModel model;
  model.t_min = cfg.t_min;
  model.T = sch.T;
  model.a.assign(static_cast<size_t>(cfg.n_bins), 0.0);
  model.b.assign(static_cast<size_t>(cfg.n_bins), 0.0);
  model.mean_est = CoilImage::zeros(nc, ny, nx);
  for (const auto &x : data) axpy(Cx(1.0 / static_cast<double>(data.size()), 0.0), x, model.mean_est);

  const double nB = static_cast<double>(data.size());
  const double mu_sq = norm2_sq(model.mean_est);
  const int tail = std::clamp(cfg.polyak_tail, 1, cfg.epochs);
  Prng rng(cfg.seed);

  for (Index k = 0; k < cfg.n_bins; ++k) {
    const double t = model.bin_center(k);
    const double s2 = sigma2(sch, t);
    const double sig = std::sqrt(s2);

    double a = 0.0, b = 0.0;
    double sum_a = 0.0, sum_b = 0.0;
    double prev_loss = std::numeric_limits<double>::infinity();
    int rise_streak = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      // fresh perturbations; the per-epoch objective in (a, b) is an exact
      // quadratic, so its sufficient statistics replace the full residuals
      double sxx = 0.0, sxm = 0.0, sxt = 0.0, smt = 0.0, stt = 0.0;
      for (const auto &x0 : data) {
        CoilImage qn = complex_noise(nc, ny, nx, rng);
        if (s) qn = q_project(*s, qn);
        CoilImage xt = x0;
        axpy(Cx(sig, 0.0), qn, xt);
        sxx += norm2_sq(xt);
        sxm += dot(xt, model.mean_est).real();
        sxt += dot(xt, qn).real() * (-1.0 / sig);
        smt += dot(model.mean_est, qn).real() * (-1.0 / sig);
        stt += norm2_sq(qn) / s2;
      }
      const double w = 2.0 * s2 / nB;
      const double ga = w * (a * sxx + b * sxm - sxt);
      const double gb = w * (a * sxm + b * nB * mu_sq - smt);
      const double trace_h = w * (sxx + nB * mu_sq);
      if (trace_h > 0.0) {
        const double lr = 2.0 * cfg.lr_safety / trace_h;
        a -= lr * ga;
        b -= lr * gb;
      }
      const double loss = (s2 / nB) * (a * a * sxx + b * b * nB * mu_sq + stt + 2.0 * a * b * sxm -
                                       2.0 * a * sxt - 2.0 * b * smt);
      if (loss > prev_loss) {
        if (++rise_streak >= cfg.divergence_limit)
          throw TrainingDivergedError("train_dsm: loss rose for " +
                                      std::to_string(cfg.divergence_limit) +
                                      " consecutive epochs");
      } else {
        rise_streak = 0;
      }
      prev_loss = loss;
      if (epoch >= cfg.epochs - tail) {
        sum_a += a;
        sum_b += b;
      }
    }
    model.a[static_cast<size_t>(k)] = sum_a / static_cast<double>(tail);
    model.b[static_cast<size_t>(k)] = sum_b / static_cast<double>(tail);
  }
  return model;
}

}  // namespace spiritdiff
