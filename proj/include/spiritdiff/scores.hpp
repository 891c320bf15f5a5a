#pragma once

#include "spiritdiff/sde.hpp"

namespace spiritdiff {

struct TrainingDivergedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Isotropic Gaussian prior N(mean, var I) per real component; the diffused
// marginal score is then available in closed form and anchors every
// verification path in this module.
struct GaussianPrior {
  CoilImage mean;
  double var = 1.0;
};

// -(x - mean) / (var + sigma2(t)), projected when maps are given, the exact
// marginal score along the projected subspace.
CoilImage gaussian_score(const GaussianPrior &p, const SdeSchedule &sch, const CoilImage &x,
                         double t, const SensitivityMaps *s);

ScoreFn make_gaussian_score_fn(GaussianPrior p, SdeSchedule sch, const SensitivityMaps *s);

// Two real coefficient tables over uniform time bins:
// score(x, t) = a(t) * x + b(t) * mean_est.
struct LinearScoreModel {
  std::vector<double> a, b;
  double t_min = 1e-3;
  double T = 1.0;
  CoilImage mean_est;

  Index n_bins() const { return static_cast<Index>(a.size()); }
  Index bin_of(double t) const;
  double bin_center(Index k) const;
  CoilImage score(const CoilImage &x, double t) const;
  ScoreFn as_score_fn() const;
};

// Denoising objective at one time: perturb each sample, regress the model
// onto the kernel score -q(x(t) - x0) / sigma2(t), weight by sigma2(t).
double dsm_loss(const LinearScoreModel &model, const std::vector<CoilImage> &batch, double t,
                const SdeSchedule &sch, const SensitivityMaps *s, Prng &rng);

// Same objective with caller-provided perturbation noise, one stack per
// sample; lets tests pin the draw.
double dsm_loss_with_noise(const LinearScoreModel &model, const std::vector<CoilImage> &batch,
                           double t, const SdeSchedule &sch, const SensitivityMaps *s,
                           const std::vector<CoilImage> &noise);

struct TrainConfig {
  Index n_bins = 10;
  int epochs = 300;
  double t_min = 1e-3;
  double lr_safety = 0.9;
  int polyak_tail = 100;
  int divergence_limit = 50;
  uint64_t seed = 7;
};

// Per-bin gradient descent on dsm_loss over (a, b): fresh perturbation draws
// every epoch, step size set from the exact quadratic curvature, tail-averaged
// iterates.
LinearScoreModel train_dsm(const std::vector<CoilImage> &data, const SdeSchedule &sch,
                           const SensitivityMaps *s, const TrainConfig &cfg);

}  // namespace spiritdiff
