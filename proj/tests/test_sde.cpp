#include "doctest.h"

#include "spiritdiff/calibration.hpp"
#include "spiritdiff/fourier.hpp"
#include "spiritdiff/sde.hpp"
#include "spiritdiff/simdata.hpp"

#include <cmath>

using namespace spiritdiff;

namespace {

SdeSchedule default_schedule()
{
  return SdeSchedule{};  // beta 0.1 -> 10, eta == 1, T = 1
}

SdeSchedule no_drift_schedule()
{
  SdeSchedule sch;
  sch.eta_min = sch.eta_max = 0.0;
  return sch;
}

// Simpson quadrature of the accumulated variance, used as an independent
// reference for schedules without a closed form
double sigma2_reference(const SdeSchedule &sch, double t)
{
  const auto eta_int = [&](double tau) {
    // integral of the linear eta ramp from tau to t
    return sch.eta_min * (t - tau) +
           (sch.eta_max - sch.eta_min) * (t * t - tau * tau) / (2.0 * sch.T);
  };
  const auto f = [&](double tau) { return sch.beta(tau) * std::exp(eta_int(tau)); };
  const int n = 2000;
  const double h = t / n;
  double acc = f(0.0) + f(t);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(i * h);
  return 0.5 * acc * h / 3.0;
}

CoilImage consistent_plane(Index ncoils, Index n, uint64_t seed, SpiritKernel *ker_out,
                           SensitivityMaps *maps_out)
{
  // identical coils: the calibrated kernel interpolates this data almost
  // exactly, so the consistency drift vanishes on it
  Prng rng(seed);
  CxArray plane(n, n);
  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c < n; ++c) plane(r, c) = rng.complex_gaussian();

  KSpaceGrid k = KSpaceGrid::zeros(ncoils, n, n);
  CoilImage raw = CoilImage::zeros(ncoils, n, n);
  for (Index c = 0; c < ncoils; ++c) {
    k.coils[c] = plane;
    raw.coils[c].setConstant(Cx(1.0, 0.0));
  }
  if (ker_out) *ker_out = calibrate(k, 5, 5, 1e-8);
  if (maps_out) *maps_out = normalize_maps(raw);
  return ifft2c(k);
}

}  // namespace

TEST_CASE("schedule validation rejects out-of-domain parameters")
{
  CHECK_NOTHROW(default_schedule().validate());
  SdeSchedule sch;
  sch.T = 0.0;
  CHECK_THROWS_AS(sch.validate(), std::invalid_argument);
  sch = default_schedule();
  sch.beta_min = 0.0;
  CHECK_THROWS_AS(sch.validate(), std::invalid_argument);
  sch = default_schedule();
  sch.eta_min = -0.5;
  CHECK_THROWS_AS(sch.validate(), std::invalid_argument);
  sch = default_schedule();
  sch.n_steps = 0;
  CHECK_THROWS_AS(sch.validate(), std::invalid_argument);
}

TEST_CASE("accumulated variance starts at zero and never decreases")
{
  const SdeSchedule sch = default_schedule();
  CHECK(sigma2(sch, 0.0) == doctest::Approx(0.0).epsilon(1e-15));
  double prev = 0.0;
  for (int i = 1; i <= 20; ++i) {
    const double v = sigma2(sch, i / 20.0);
    CHECK(v >= prev);
    prev = v;
  }
  CHECK(sigma(sch, 0.7) == doctest::Approx(std::sqrt(sigma2(sch, 0.7))).epsilon(1e-14));
  CHECK_THROWS((void)sigma2(sch, -0.1));
  CHECK_THROWS((void)sigma2(sch, sch.T + 0.1));
}

TEST_CASE("variance without amplification is half the noise-rate integral")
{
  SdeSchedule sch = no_drift_schedule();
  for (double t : {0.25, 0.5, 1.0}) {
    const double want =
        0.5 * (sch.beta_min * t + (sch.beta_max - sch.beta_min) * t * t / (2.0 * sch.T));
    CHECK(sigma2(sch, t) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("constant-rate schedules match their exponential closed form")
{
  SdeSchedule sch;
  sch.beta_min = sch.beta_max = 2.0;
  sch.eta_min = sch.eta_max = 1.5;
  for (double t : {0.3, 0.7, 1.0}) {
    const double want = (2.0 / (2.0 * 1.5)) * (std::exp(1.5 * t) - 1.0);
    CHECK(sigma2(sch, t) == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("ramped amplification matches independent quadrature")
{
  SdeSchedule sch;
  sch.eta_min = 0.5;
  sch.eta_max = 2.0;
  for (double t : {0.25, 0.6, 1.0})
    CHECK(sigma2(sch, t) == doctest::Approx(sigma2_reference(sch, t)).epsilon(1e-6));
}

TEST_CASE("perturbing at t = 0 returns the input; draws are reproducible")
{
  const SdeSchedule sch = no_drift_schedule();
  const RealArray ph = make_phantom(default_phantom_spec(16));
  CoilImage x0 = CoilImage::zeros(1, 16, 16);
  x0.coils[0] = ph.cast<Cx>();

  Prng rng(11);
  const CoilImage at_zero = perturb(x0, 0.0, sch, nullptr, rng);
  CHECK(norm2(at_zero - x0) == 0.0);

  Prng a(17), b(17);
  const CoilImage xa = perturb(x0, 0.5, sch, nullptr, a);
  const CoilImage xb = perturb(x0, 0.5, sch, nullptr, b);
  CHECK(norm2(xa - xb) == 0.0);
}

TEST_CASE("perturbation noise carries the scheduled per-component variance")
{
  const SdeSchedule sch = no_drift_schedule();
  const double t = 0.5, v = sigma2(sch, t);
  const Index nc = 2, n = 8;
  const CoilImage x0 = CoilImage::zeros(nc, n, n);

  Prng rng(23);
  const int draws = 3000;
  double acc = 0.0;
  for (int i = 0; i < draws; ++i) acc += norm2_sq(perturb(x0, t, sch, nullptr, rng));
  const double per_real = acc / (draws * 2.0 * nc * n * n);
  CHECK(per_real == doctest::Approx(v).epsilon(0.02));
}

TEST_CASE("projected perturbation concentrates the noise on the coil subspace")
{
  const SdeSchedule sch = no_drift_schedule();
  const double t = 0.5, v = sigma2(sch, t);
  const Index nc = 3, n = 8;
  const SensitivityMaps s = make_sensitivities(nc, n, n, 0.5);
  REQUIRE(s.norm.minCoeff() > 0.0);
  const CoilImage x0 = CoilImage::zeros(nc, n, n);

  Prng rng(29);
  const int draws = 3000;
  double acc = 0.0;
  for (int i = 0; i < draws; ++i) {
    const CoilImage x = perturb(x0, t, sch, &s, rng);
    acc += norm2_sq(x);
    if (i == 0) CHECK(norm2(q_project(s, x) - x) / norm2(x) < 1e-12);
  }
  // rank-one-per-pixel projection leaves one complex dof per pixel
  const double per_real = acc / (draws * 2.0 * n * n);
  CHECK(per_real == doctest::Approx(v).epsilon(0.02));
}

TEST_CASE("forward integration reproduces the scheduled terminal variance")
{
  SdeSchedule sch = no_drift_schedule();
  const double want = sigma2(sch, 1.0);
  const Index n = 8;
  const CoilImage x0 = CoilImage::zeros(1, n, n);

  Prng rng(31);
  const int paths = 1500;
  double acc = 0.0;
  for (int i = 0; i < paths; ++i) {
    const DiffusionState st = simulate_forward(x0, sch, nullptr, nullptr, 300, rng);
    CHECK(st.t == doctest::Approx(1.0));
    acc += norm2_sq(st.x);
  }
  const double per_real = acc / (paths * 2.0 * n * n);
  CHECK(per_real == doctest::Approx(want).epsilon(0.02));
}

TEST_CASE("a blind interpolation kernel amplifies noise at the scheduled rate")
{
  // a zero kernel makes the consistency penalty the identity, so the drift
  // amplifies everything and the terminal variance picks up the exponential
  SdeSchedule sch;
  sch.beta_min = sch.beta_max = 2.0;
  sch.eta_min = sch.eta_max = 1.0;
  const double want = sigma2(sch, 1.0);
  CHECK(want == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-10));

  const Index n = 8;
  const CoilImage x0 = CoilImage::zeros(1, n, n);
  const SpiritKernel blind = SpiritKernel::zeros(1, 3, 3);

  Prng rng(37);
  const int paths = 1500;
  double acc = 0.0;
  for (int i = 0; i < paths; ++i)
    acc += norm2_sq(simulate_forward(x0, sch, &blind, nullptr, 300, rng).x);
  const double per_real = acc / (paths * 2.0 * n * n);
  CHECK(per_real == doctest::Approx(want).epsilon(0.02));
}

TEST_CASE("consistent data drifts nowhere under forward amplification")
{
  SpiritKernel ker;
  SensitivityMaps s;
  const CoilImage truth = consistent_plane(2, 16, 41, &ker, &s);

  const SdeSchedule sch = default_schedule();
  Prng rng(43);
  const int paths = 600;
  CoilImage mean = CoilImage::zeros(2, 16, 16);
  for (int i = 0; i < paths; ++i)
    axpy(Cx(1.0 / paths, 0.0), simulate_forward(truth, sch, &ker, &s, 60, rng, 0.0, 0.3).x,
         mean);

  const double sd = sigma(sch, 0.3);
  const double mc_floor = sd * std::sqrt(2.0 * 16.0 * 16.0 / paths);
  CHECK(norm2(mean - truth) < 3.0 * mc_floor + 0.01 * norm2(truth));
}

TEST_CASE("forward integration demands a kernel whenever the drift is on")
{
  const CoilImage x0 = CoilImage::zeros(1, 8, 8);
  Prng rng(47);
  CHECK_THROWS_AS(
      (void)simulate_forward(x0, default_schedule(), nullptr, nullptr, 10, rng),
      std::invalid_argument);
}

TEST_CASE("reverse step leaves consistent data alone when the score is silent")
{
  SpiritKernel ker;
  SensitivityMaps s;
  const CoilImage x = consistent_plane(2, 16, 53, &ker, &s);
  const PsiOperator psi_op = make_psi(ker, 16, 16);
  const ScoreFn silent = [](const CoilImage &in, double) {
    return CoilImage::zeros(in.ncoils(), in.ny(), in.nx());
  };

  Prng rng(59);
  const DiffusionState out =
      reverse_step({x, 0.5}, 0.1, silent, default_schedule(), &psi_op, &s, rng, false);
  CHECK(out.t == doctest::Approx(0.4));
  CHECK(norm2(out.x - x) / norm2(x) < 1e-5);
}

TEST_CASE("score term enters with half the instantaneous noise rate")
{
  const SdeSchedule sch = no_drift_schedule();
  const Index n = 8;
  Prng data_rng(61);
  const CoilImage x = complex_noise<ImageDomainTag>(1, n, n, data_rng);
  const Cx c(0.7, -0.4);
  const ScoreFn constant = [&](const CoilImage &in, double) {
    CoilImage g = CoilImage::zeros(in.ncoils(), in.ny(), in.nx());
    g.coils[0].setConstant(c);
    return g;
  };

  const double t = 0.9, dt = 0.02;
  Prng rng(67);
  const DiffusionState out =
      reverse_step({x, t}, dt, constant, sch, static_cast<const PsiOperator *>(nullptr),
                   nullptr, rng, false);
  const Cx delta = (out.x.coils[0] - x.coils[0]).mean();
  const double scale = (delta / c).real() / (0.5 * dt);
  CHECK(std::abs((delta / c).imag()) < 1e-12);
  CHECK(scale >= sch.beta(t - dt));
  CHECK(scale <= sch.beta(t));
}

TEST_CASE("kernel and cached-operator reverse steps agree")
{
  SpiritKernel ker;
  SensitivityMaps s;
  const CoilImage x = consistent_plane(2, 12, 71, &ker, &s);
  const PsiOperator psi_op = make_psi(ker, 12, 12);
  const ScoreFn silent = [](const CoilImage &in, double) {
    return CoilImage::zeros(in.ncoils(), in.ny(), in.nx());
  };

  Prng ra(73), rb(73);
  const DiffusionState via_cached =
      reverse_step({x, 0.8}, 0.05, silent, default_schedule(), &psi_op, &s, ra);
  const DiffusionState via_kernel =
      reverse_step({x, 0.8}, 0.05, silent, default_schedule(), &ker, &s, rb);
  CHECK(norm2(via_cached.x - via_kernel.x) == 0.0);
}

TEST_CASE("one projection of the score equals two")
{
  const SensitivityMaps s = make_sensitivities(3, 12, 12, 0.5);
  Prng data_rng(79);
  const CoilImage x = complex_noise<ImageDomainTag>(3, 12, 12, data_rng);
  const ScoreFn noisy = [&](const CoilImage &in, double) {
    Prng g(101);
    return complex_noise<ImageDomainTag>(in.ncoils(), in.ny(), in.nx(), g);
  };

  const SdeSchedule sch = no_drift_schedule();
  Prng ra(83), rb(83);
  const DiffusionState twice =
      reverse_step({x, 0.6}, 0.05, noisy, sch, static_cast<const PsiOperator *>(nullptr),
                   &s, ra, false, false);
  const DiffusionState once =
      reverse_step({x, 0.6}, 0.05, noisy, sch, static_cast<const PsiOperator *>(nullptr),
                   &s, rb, false, true);
  CHECK(norm2(twice.x - once.x) / norm2(twice.x) < 1e-12);
}

TEST_CASE("reverse step rejects bad arguments")
{
  const CoilImage x = CoilImage::zeros(1, 8, 8);
  const ScoreFn silent = [](const CoilImage &in, double) {
    return CoilImage::zeros(in.ncoils(), in.ny(), in.nx());
  };
  Prng rng(89);
  const SdeSchedule nod = no_drift_schedule();
  CHECK_THROWS_AS((void)reverse_step({x, 0.5}, 0.0, silent, nod,
                                     static_cast<const PsiOperator *>(nullptr), nullptr, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)reverse_step({x, 0.1}, 0.2, silent, nod,
                                     static_cast<const PsiOperator *>(nullptr), nullptr, rng),
                  std::domain_error);
  CHECK_THROWS_AS((void)reverse_step({x, 0.5}, 0.1, silent, default_schedule(),
                                     static_cast<const PsiOperator *>(nullptr), nullptr, rng),
                  std::invalid_argument);
}

TEST_CASE("reverse noise injection carries half the noise rate over the step")
{
  SdeSchedule sch = no_drift_schedule();
  sch.beta_min = sch.beta_max = 4.0;
  const Index n = 4;
  const CoilImage x = CoilImage::zeros(1, n, n);
  const ScoreFn silent = [](const CoilImage &in, double) {
    return CoilImage::zeros(in.ncoils(), in.ny(), in.nx());
  };

  const double dt = 0.01;
  Prng rng(97);
  const int reps = 4000;
  double acc = 0.0;
  for (int i = 0; i < reps; ++i) {
    const DiffusionState out = reverse_step({x, 0.5}, dt, silent, sch,
                                            static_cast<const PsiOperator *>(nullptr),
                                            nullptr, rng);
    acc += norm2_sq(out.x);
  }
  const double per_real = acc / (reps * 2.0 * n * n);
  CHECK(per_real == doctest::Approx(0.5 * 4.0 * dt).epsilon(0.03));
}

TEST_CASE("annealed sampling with hard data consistency honors a full mask")
{
  const Index n = 16;
  const SensitivityMaps s = make_sensitivities(2, n, n, 0.5);
  const RealArray ph = make_phantom(default_phantom_spec(n));
  CoilImage truth = CoilImage::zeros(2, n, n);
  for (Index c = 0; c < 2; ++c) truth.coils[c] = s.maps[c] * ph.cast<Cx>();

  SamplingMask m;
  m.keep = RealArray::Ones(n, n);
  m.acs = {0, n, 0, n};
  const KSpaceGrid y = acquire(truth, m);

  const ScoreFn silent = [](const CoilImage &in, double) {
    return CoilImage::zeros(in.ncoils(), in.ny(), in.nx());
  };
  SamplerConfig cfg;
  cfg.n_steps = 20;

  Prng rng(103);
  const CoilImage out =
      sample_reverse(y, m, silent, no_drift_schedule(), nullptr, nullptr, cfg, rng);
  CHECK(norm2(fft2c(out) - y) / norm2(y) < 1e-10);
}

TEST_CASE("annealed sampling is deterministic per seed and reports every step")
{
  const Index n = 16;
  Prng data_rng(107);
  const CoilImage truth = complex_noise<ImageDomainTag>(1, n, n, data_rng);
  const SamplingMask m = make_mask(n, n, 2, 4);
  const KSpaceGrid y = acquire(truth, m);
  const ScoreFn silent = [](const CoilImage &in, double) {
    return CoilImage::zeros(in.ncoils(), in.ny(), in.nx());
  };
  SamplerConfig cfg;
  cfg.n_steps = 25;

  int calls = 0;
  double last_t = 2.0;
  const SampleObserver obs = [&](int, double t, const CoilImage &) {
    ++calls;
    CHECK(t < last_t);
    last_t = t;
  };

  Prng ra(109), rb(109);
  const CoilImage xa =
      sample_reverse(y, m, silent, no_drift_schedule(), nullptr, nullptr, cfg, ra, obs);
  const CoilImage xb =
      sample_reverse(y, m, silent, no_drift_schedule(), nullptr, nullptr, cfg, rb);
  CHECK(calls == cfg.n_steps);
  CHECK(norm2(xa - xb) == 0.0);
}

TEST_CASE("annealed sampling rejects an empty mask and a missing kernel")
{
  const Index n = 8;
  const KSpaceGrid y = KSpaceGrid::zeros(1, n, n);
  const ScoreFn silent = [](const CoilImage &in, double) {
    return CoilImage::zeros(in.ncoils(), in.ny(), in.nx());
  };
  SamplerConfig cfg;
  cfg.n_steps = 5;
  Prng rng(113);

  SamplingMask empty;
  empty.keep = RealArray::Zero(n, n);
  empty.acs = {0, 0, 0, 0};
  CHECK_THROWS_AS((void)sample_reverse(y, empty, silent, no_drift_schedule(), nullptr,
                                       nullptr, cfg, rng),
                  std::invalid_argument);

  const SamplingMask m = make_mask(n, n, 2, 2);
  CHECK_THROWS_AS(
      (void)sample_reverse(y, m, silent, default_schedule(), nullptr, nullptr, cfg, rng),
      std::invalid_argument);
}

TEST_CASE("soft and absent data consistency both produce finite samples")
{
  const Index n = 16;
  const SensitivityMaps s = make_sensitivities(2, n, n, 0.5);
  const RealArray ph = make_phantom(default_phantom_spec(n));
  CoilImage truth = CoilImage::zeros(2, n, n);
  for (Index c = 0; c < 2; ++c) truth.coils[c] = s.maps[c] * ph.cast<Cx>();
  const SamplingMask m = make_mask(n, n, 2, 4);
  const KSpaceGrid y = acquire(truth, m);
  const ScoreFn silent = [](const CoilImage &in, double) {
    return CoilImage::zeros(in.ncoils(), in.ny(), in.nx());
  };

  for (DcMode mode : {DcMode::Gradient, DcMode::None}) {
    SamplerConfig cfg;
    cfg.n_steps = 15;
    cfg.dc.mode = mode;
    Prng rng(127);
    const CoilImage out =
        sample_reverse(y, m, silent, no_drift_schedule(), nullptr, nullptr, cfg, rng);
    CHECK(std::isfinite(norm2(out)));
    CHECK(norm2(out) > 0.0);
  }
}
