#include "spiritdiff/cli.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "spiritdiff/config.hpp"
#include "spiritdiff/io.hpp"
#include "spiritdiff/recon.hpp"
#include "spiritdiff/simdata.hpp"

namespace spiritdiff {

namespace {

namespace fs = std::filesystem;

// shortest round-trip decimal form, so echoed values re-parse exactly
std::string real_str(double v)
{
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  long long seed = 0;
  CLI::Option *seed_opt = nullptr;
};

void add_common(CLI::App *cmd, CommonArgs &c)
{
  cmd->add_option("--config", c.config_path, "key = value configuration file");
  cmd->add_option("--out-dir", c.out_dir, "experiment directory (default: current)");
  c.seed_opt = cmd->add_option("--seed", c.seed, "override the config seed");
}

Config load_config(const CommonArgs &c)
{
  Config cfg;
  if (!c.config_path.empty()) cfg = Config::parse_file(c.config_path);
  if (c.seed_opt != nullptr && c.seed_opt->count() > 0) cfg.set("seed", std::to_string(c.seed));
  return cfg;
}

std::string join_path(const std::string &dir, const std::string &name)
{
  return (fs::path(dir) / name).string();
}

void attach_cfg(ContainerData &c, const Config &cfg)
{
  for (const auto &line : cfg.echo_lines()) c.meta.emplace_back("cfg", line);
}

// config echo plus one checksum line per artifact, written next to the
// artifacts and mirrored on stdout
void emit_manifest(const std::string &out_dir, const std::string &manifest_name,
                   const std::string &command, const Config &cfg,
                   const std::vector<std::string> &files)
{
  std::ostringstream m;
  m << "spiritdiff-manifest 1\n";
  m << "command " << command << "\n";
  for (const auto &line : cfg.echo_lines()) m << "cfg " << line << "\n";
  for (const auto &f : files)
    m << "file " << f << ' ' << hex64(fnv1a64_file(join_path(out_dir, f))) << "\n";
  const std::string text = m.str();
  std::ofstream out(join_path(out_dir, manifest_name), std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write manifest: " + manifest_name);
  out << text;
  std::cout << text;
}

void append_csv(const std::string &path, const std::string &method, double accel, long long seed,
                double psnr_v, double nrmse_v, double wall_ms)
{
  const bool fresh = !fs::exists(path);
  std::ofstream f(path, std::ios::app);
  if (!f) throw std::runtime_error("cannot write csv: " + path);
  if (fresh) f << "method,R,seed,psnr,nrmse,wall_time_ms\n";
  f << method << ',' << real_str(accel) << ',' << seed << ',' << real_str(psnr_v) << ','
    << real_str(nrmse_v) << ',' << static_cast<long long>(wall_ms + 0.5) << "\n";
}

SdeSchedule schedule_from(const Config &cfg)
{
  SdeSchedule sch;
  sch.beta_min = cfg.get_real("sde.beta_min", sch.beta_min);
  sch.beta_max = cfg.get_real("sde.beta_max", sch.beta_max);
  sch.eta_min = cfg.get_real("sde.eta_min", sch.eta_min);
  sch.eta_max = cfg.get_real("sde.eta_max", sch.eta_max);
  sch.T = cfg.get_real("sde.T", sch.T);
  sch.n_steps = static_cast<int>(cfg.get_int("sde.steps", sch.n_steps));
  sch.validate();
  return sch;
}

void echo_schedule(Config &cfg, const SdeSchedule &sch)
{
  cfg.set("sde.beta_min", real_str(sch.beta_min));
  cfg.set("sde.beta_max", real_str(sch.beta_max));
  cfg.set("sde.eta_min", real_str(sch.eta_min));
  cfg.set("sde.eta_max", real_str(sch.eta_max));
  cfg.set("sde.T", real_str(sch.T));
  cfg.set("sde.steps", std::to_string(sch.n_steps));
}

int run_simulate(const CommonArgs &common, const CLI::Option *accel_opt, long long accel,
                 const CLI::Option *acs_opt, long long acs_override)
{
  Config cfg = load_config(common);
  if (accel_opt->count() > 0) cfg.set("mask.r", std::to_string(accel));
  if (acs_opt->count() > 0) cfg.set("mask.acs", std::to_string(acs_override));
  const bool strict = !common.config_path.empty();

  const auto size = static_cast<Index>(strict ? cfg.req_int("grid.size") : cfg.get_int("grid.size", 64));
  const auto ncoils = static_cast<Index>(strict ? cfg.req_int("coils.n") : cfg.get_int("coils.n", 4));
  const auto r = static_cast<Index>(strict ? cfg.req_int("mask.r") : cfg.get_int("mask.r", 6));
  const auto acs = static_cast<Index>(strict ? cfg.req_int("mask.acs") : cfg.get_int("mask.acs", 8));
  const std::string preset = cfg.get_str("phantom.preset", "vessel");
  if (preset != "vessel")
    throw ConfigError("phantom.preset", "unknown phantom preset '" + preset + "'");
  const std::string scheme_name = cfg.get_str("mask.scheme", "uniform");
  MaskScheme scheme = MaskScheme::Uniform;
  if (scheme_name == "random")
    scheme = MaskScheme::Random;
  else if (scheme_name != "uniform")
    throw ConfigError("mask.scheme", "config field 'mask.scheme' must be uniform or random, got '" +
                                         scheme_name + "'");
  const double decay = cfg.get_real("coils.decay", 0.5);
  const double phase = cfg.get_real("coils.phase", 0.5);
  const double angle0 = cfg.get_real("coils.angle0", 0.0);
  const double noise_sigma = cfg.get_real("noise.sigma", 0.0);
  const long long seed = cfg.get_int("seed", 1);

  cfg.set("grid.size", std::to_string(size));
  cfg.set("phantom.preset", preset);
  cfg.set("coils.n", std::to_string(ncoils));
  cfg.set("coils.decay", real_str(decay));
  cfg.set("coils.phase", real_str(phase));
  cfg.set("coils.angle0", real_str(angle0));
  cfg.set("mask.r", std::to_string(r));
  cfg.set("mask.acs", std::to_string(acs));
  cfg.set("mask.scheme", scheme_name);
  cfg.set("noise.sigma", real_str(noise_sigma));
  cfg.set("seed", std::to_string(seed));

  Prng rng(static_cast<uint64_t>(seed));
  const RealArray phantom = make_phantom(default_phantom_spec(size));
  const SensitivityMaps maps = make_sensitivities(ncoils, size, size, decay, phase, angle0);
  const SamplingMask mask = make_mask(size, size, r, acs, scheme, &rng);
  const Acquisition acq = simulate_acquisition(phantom, maps, mask, noise_sigma, rng);

  // separate fully sampled calibration pass: a broadband object through the
  // same coils, so the kernel fit is conditioned at every patch offset
  CoilImage cal_obj = CoilImage::zeros(ncoils, size, size);
  {
    CxArray w(size, size);
    for (Index rr = 0; rr < size; ++rr)
      for (Index cc = 0; cc < size; ++cc) w(rr, cc) = rng.complex_gaussian();
    for (Index c = 0; c < ncoils; ++c) cal_obj.coils[c] = maps.maps[c] * w;
  }
  const KSpaceGrid cal = fft2c(cal_obj);

  fs::create_directories(common.out_dir);
  auto truth_c = to_container(acq.truth, "truth");
  auto truth_cm = to_container(combine_coils(maps, acq.truth), "truth_combined");
  auto maps_c = to_container(maps);
  auto mask_c = to_container(mask);
  auto y_c = to_container(acq.y, "kspace");
  auto cal_c = to_container(cal, "kspace");
  for (auto *c : {&truth_c, &truth_cm, &maps_c, &mask_c, &y_c, &cal_c}) attach_cfg(*c, cfg);
  write_container(join_path(common.out_dir, "truth.ctr"), truth_c);
  write_container(join_path(common.out_dir, "truth_combined.ctr"), truth_cm);
  write_container(join_path(common.out_dir, "maps.ctr"), maps_c);
  write_container(join_path(common.out_dir, "mask.ctr"), mask_c);
  write_container(join_path(common.out_dir, "y.ctr"), y_c);
  write_container(join_path(common.out_dir, "cal.ctr"), cal_c);

  std::cout << "kept lines " << mask_kept_lines(mask) << ", achieved acceleration "
            << real_str(mask_acceleration(mask)) << "\n";
  emit_manifest(common.out_dir, "manifest.txt", "simulate", cfg,
                {"truth.ctr", "truth_combined.ctr", "maps.ctr", "mask.ctr", "y.ctr", "cal.ctr"});
  return 0;
}

int run_calibrate(const CommonArgs &common)
{
  Config cfg = load_config(common);
  const auto kh = static_cast<Index>(cfg.get_int("kernel.kh", 5));
  const auto kw = static_cast<Index>(cfg.get_int("kernel.kw", 5));
  const double lambda_rel = cfg.get_real("kernel.lambda_rel", 0.01);
  cfg.set("kernel.kh", std::to_string(kh));
  cfg.set("kernel.kw", std::to_string(kw));
  cfg.set("kernel.lambda_rel", real_str(lambda_rel));

  // prefer the fully sampled calibration pass; fall back to the ACS rows of
  // the accelerated acquisition when none was simulated
  KSpaceGrid acs;
  const std::string cal_path = join_path(common.out_dir, "cal.ctr");
  if (fs::exists(cal_path)) {
    acs = kspace_from(read_container(cal_path));
  } else {
    const KSpaceGrid y = kspace_from(read_container(join_path(common.out_dir, "y.ctr")));
    const SamplingMask m = mask_from(read_container(join_path(common.out_dir, "mask.ctr")));
    acs = extract_acs(y, m);
  }
  const SpiritKernel ker = calibrate_relative(acs, kh, kw, lambda_rel);
  const double resid = calibration_residual(acs, ker);

  auto kc = to_container(ker);
  attach_cfg(kc, cfg);
  fs::create_directories(common.out_dir);
  write_container(join_path(common.out_dir, "kernel.ctr"), kc);
  std::cout << "calibration residual " << real_str(resid) << "\n";
  emit_manifest(common.out_dir, "manifest_calibrate.txt", "calibrate", cfg, {"kernel.ctr"});
  return 0;
}

int run_train(const CommonArgs &common)
{
  Config cfg = load_config(common);
  const SdeSchedule sch = schedule_from(cfg);
  TrainConfig tc;
  tc.n_bins = static_cast<Index>(cfg.get_int("score.bins", tc.n_bins));
  tc.epochs = static_cast<int>(cfg.get_int("score.epochs", tc.epochs));
  tc.t_min = cfg.get_real("score.t_min", tc.t_min);
  tc.seed = static_cast<uint64_t>(cfg.get_int("seed", static_cast<long long>(tc.seed)));
  const double var = cfg.get_real("score.var", 0.001);
  const auto n_data = static_cast<Index>(cfg.get_int("score.n_data", 32));
  if (!(var > 0.0)) throw ConfigError("score.var", "config field 'score.var' must be positive");
  if (n_data < 1) throw ConfigError("score.n_data", "config field 'score.n_data' must be at least 1");
  echo_schedule(cfg, sch);
  cfg.set("score.bins", std::to_string(tc.n_bins));
  cfg.set("score.epochs", std::to_string(tc.epochs));
  cfg.set("score.t_min", real_str(tc.t_min));
  cfg.set("score.var", real_str(var));
  cfg.set("score.n_data", std::to_string(n_data));
  cfg.set("seed", std::to_string(static_cast<long long>(tc.seed)));

  const CoilImage truth = coil_image_from(read_container(join_path(common.out_dir, "truth.ctr")));
  const SensitivityMaps maps = maps_from(read_container(join_path(common.out_dir, "maps.ctr")));

  // training set: truth plus projected prior noise, drawn from a stream
  // separate from the optimizer's own draws
  Prng data_rng(tc.seed + 0x9e3779b97f4a7c15ULL);
  std::vector<CoilImage> data;
  data.reserve(static_cast<size_t>(n_data));
  const double sd = std::sqrt(var);
  for (Index i = 0; i < n_data; ++i) {
    CoilImage x = truth;
    axpy(Cx(sd, 0.0), q_project(maps, complex_noise(truth.ncoils(), truth.ny(), truth.nx(), data_rng)), x);
    data.push_back(std::move(x));
  }

  const LinearScoreModel model = train_dsm(data, sch, &maps, tc);
  for (Index k = 0; k < model.n_bins(); ++k)
    std::cout << "bin " << k << " t " << real_str(model.bin_center(k)) << " a "
              << real_str(model.a[static_cast<size_t>(k)]) << " b "
              << real_str(model.b[static_cast<size_t>(k)]) << "\n";

  auto tables = to_container(model);
  auto mean = mean_to_container(model);
  attach_cfg(tables, cfg);
  attach_cfg(mean, cfg);
  fs::create_directories(common.out_dir);
  write_container(join_path(common.out_dir, "score_model.ctr"), tables);
  write_container(join_path(common.out_dir, "score_mean.ctr"), mean);
  emit_manifest(common.out_dir, "manifest_train.txt", "train-score", cfg,
                {"score_model.ctr", "score_mean.ctr"});
  return 0;
}

int run_recon(const CommonArgs &common, const std::string &method, const CLI::Option *steps_opt,
              long long steps_flag, const CLI::Option *eta_opt, double eta_flag,
              const CLI::Option *beta_opt, double beta_flag)
{
  Config cfg = load_config(common);
  if (steps_opt->count() > 0) cfg.set("recon.steps", std::to_string(steps_flag));
  if (eta_opt->count() > 0) cfg.set("sde.eta_max", real_str(eta_flag));
  if (beta_opt->count() > 0) cfg.set("sde.beta_max", real_str(beta_flag));

  const SdeSchedule sch = schedule_from(cfg);
  const auto steps = static_cast<int>(cfg.get_int("recon.steps", 500));
  const long long seed = cfg.get_int("seed", 1234);
  if (steps < 1) throw ConfigError("recon.steps", "config field 'recon.steps' must be at least 1");
  echo_schedule(cfg, sch);
  cfg.set("recon.method", method);
  cfg.set("recon.steps", std::to_string(steps));
  cfg.set("seed", std::to_string(seed));

  const KSpaceGrid y = kspace_from(read_container(join_path(common.out_dir, "y.ctr")));
  const SamplingMask m = mask_from(read_container(join_path(common.out_dir, "mask.ctr")));
  const SensitivityMaps maps = maps_from(read_container(join_path(common.out_dir, "maps.ctr")));
  check_mask_shape(y, m, "recon");

  // score factory shared by the two samplers; the reference schedule must be
  // the one the sampler actually anneals with.  the analytic prior centers on
  // the configured phantom class: through the maps for the joint sampler, as
  // the energy-matched class average for the per-coil baseline, which never
  // sees the maps
  const auto build_score = [&](const SdeSchedule &score_sch, const SensitivityMaps *proj) {
    const std::string kind = cfg.get_str("recon.score", "analytic");
    cfg.set("recon.score", kind);
    if (kind == "analytic") {
      if (y.ny() != y.nx())
        throw ConfigError("recon.score", "analytic prior needs a square grid, got " +
                                             std::to_string(y.ny()) + "x" + std::to_string(y.nx()));
      const RealArray cls = make_phantom(default_phantom_spec(y.ny()));
      GaussianPrior prior;
      prior.mean = CoilImage::zeros(y.ncoils(), y.ny(), y.nx());
      const double pool = 1.0 / std::sqrt(static_cast<double>(y.ncoils()));
      for (Index c = 0; c < y.ncoils(); ++c) {
        if (proj)
          prior.mean.coils[c] = maps.maps[c] * cls.cast<Cx>();
        else
          prior.mean.coils[c] = pool * cls.cast<Cx>();
      }
      prior.var = cfg.get_real("recon.prior_var", 0.001);
      cfg.set("recon.prior_var", real_str(prior.var));
      return make_gaussian_score_fn(std::move(prior), score_sch, proj);
    }
    if (kind == "model") {
      const auto tables = read_container(join_path(common.out_dir, "score_model.ctr"));
      const auto mean = read_container(join_path(common.out_dir, "score_mean.ctr"));
      return score_model_from(tables, mean).as_score_fn();
    }
    throw ConfigError("recon.score",
                      "config field 'recon.score' must be analytic or model, got '" + kind + "'");
  };

  Prng rng(static_cast<uint64_t>(seed));
  CoilImage coils;
  CxArray combined;
  const auto t0 = std::chrono::steady_clock::now();
  if (method == "zf") {
    ZfResult r = recon_zero_filled(y, m, maps);
    coils = std::move(r.coils);
    combined = std::move(r.combined);
  } else if (method == "cgspirit") {
    const SpiritKernel ker = kernel_from(read_container(join_path(common.out_dir, "kernel.ctr")));
    CgConfig cc;
    cc.n_iter = static_cast<int>(cfg.get_int("recon.cg_iters", cc.n_iter));
    cc.tol = cfg.get_real("recon.cg_tol", cc.tol);
    cc.lambda_reg = cfg.get_real("recon.cg_lambda", cc.lambda_reg);
    cfg.set("recon.cg_iters", std::to_string(cc.n_iter));
    cfg.set("recon.cg_tol", real_str(cc.tol));
    cfg.set("recon.cg_lambda", real_str(cc.lambda_reg));
    CgSpiritResult r = recon_cg_spirit(y, m, ker, cc);
    if (!r.converged) std::cout << "cg hit the iteration cap before tolerance\n";
    coils = std::move(r.image);
    combined = combine_coils(maps, coils);
  } else if (method == "vesde") {
    SdeSchedule ve = sch;
    ve.eta_min = 0.0;
    ve.eta_max = 0.0;
    const ScoreFn score = build_score(ve, nullptr);
    coils = recon_vesde(y, m, score, sch, steps, rng);
    combined = combine_coils(maps, coils);
  } else if (method == "spiritdiff") {
    const SpiritKernel ker = kernel_from(read_container(join_path(common.out_dir, "kernel.ctr")));
    const ScoreFn score = build_score(sch, &maps);
    SamplerConfig sc;
    sc.n_steps = steps;
    sc.corrector.enabled = cfg.get_bool("recon.corrector", true);
    sc.corrector.n_inner = static_cast<int>(cfg.get_int("recon.corrector_steps", 1));
    sc.corrector.snr = cfg.get_real("recon.snr", 0.16);
    const std::string dc = cfg.get_str("recon.dc", "hard");
    if (dc == "hard")
      sc.dc.mode = DcMode::Hard;
    else if (dc == "gradient")
      sc.dc.mode = DcMode::Gradient;
    else if (dc == "none")
      sc.dc.mode = DcMode::None;
    else
      throw ConfigError("recon.dc",
                        "config field 'recon.dc' must be hard, gradient or none, got '" + dc + "'");
    sc.dc.lambda = cfg.get_real("recon.dc_lambda", 1.0);
    cfg.set("recon.corrector", sc.corrector.enabled ? "true" : "false");
    cfg.set("recon.corrector_steps", std::to_string(sc.corrector.n_inner));
    cfg.set("recon.snr", real_str(sc.corrector.snr));
    cfg.set("recon.dc", dc);
    cfg.set("recon.dc_lambda", real_str(sc.dc.lambda));
    SpiritDiffResult r = recon_spirit_diffusion(y, m, ker, maps, score, sch, sc, rng);
    coils = std::move(r.coils);
    combined = std::move(r.combined);
  } else {
    throw ConfigError("method", "unknown method '" + method +
                                    "', expected zf, cgspirit, vesde or spiritdiff");
  }
  const double wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  const std::string coils_name = "recon_" + method + "_coils.ctr";
  const std::string combined_name = "recon_" + method + "_combined.ctr";
  auto cc = to_container(coils, "recon_coils");
  auto cb = to_container(combined, "recon_combined");
  attach_cfg(cc, cfg);
  attach_cfg(cb, cfg);
  fs::create_directories(common.out_dir);
  write_container(join_path(common.out_dir, coils_name), cc);
  write_container(join_path(common.out_dir, combined_name), cb);

  const std::string truth_path = join_path(common.out_dir, "truth.ctr");
  if (fs::exists(truth_path)) {
    const CoilImage truth = coil_image_from(read_container(truth_path));
    const CxArray truth_combined = combine_coils(maps, truth);
    const double p = psnr(combined, truth_combined);
    const double e = nrmse(combined, truth_combined);
    append_csv(join_path(common.out_dir, "metrics.csv"), method, mask_acceleration(m), seed, p, e,
               wall_ms);
    std::cout << "psnr " << real_str(p) << " dB, nrmse " << real_str(e) << ", wall "
              << real_str(wall_ms) << " ms\n";
  }
  emit_manifest(common.out_dir, "manifest_recon_" + method + ".txt", "recon", cfg,
                {coils_name, combined_name});
  return 0;
}

int run_metrics(const std::string &a_path, const std::string &b_path, const std::string &csv,
                const std::string &label)
{
  const ContainerData ca = read_container(a_path);
  const ContainerData cb = read_container(b_path);
  if (ca.shape != cb.shape)
    throw ShapeError("metrics: containers disagree in shape");
  const auto n = static_cast<Index>(ca.payload.size());
  CxArray fa(1, n), fb(1, n);
  for (Index i = 0; i < n; ++i) {
    fa(0, i) = ca.payload[static_cast<size_t>(i)];
    fb(0, i) = cb.payload[static_cast<size_t>(i)];
  }
  const double p = psnr(fa, fb);
  const double e = nrmse(fa, fb);
  std::cout << "psnr " << real_str(p) << "\n";
  std::cout << "nrmse " << real_str(e) << "\n";
  if (!csv.empty()) append_csv(csv, label, 0.0, 0, p, e, 0.0);
  return 0;
}

int run_render(const CommonArgs &common, const std::string &recon_path)
{
  const ContainerData rc = read_container(recon_path);
  const SensitivityMaps maps = maps_from(read_container(join_path(common.out_dir, "maps.ctr")));
  CxArray rec;
  if (rc.shape.size() == 2) {
    rec = cxarray_from(rc);
  } else {
    rec = combine_coils(maps, coil_image_from(rc));
  }
  const CoilImage truth = coil_image_from(read_container(join_path(common.out_dir, "truth.ctr")));
  const CxArray truth_combined = combine_coils(maps, truth);
  if (rec.rows() != truth_combined.rows() || rec.cols() != truth_combined.cols())
    throw ShapeError("render: reconstruction and truth disagree in shape");

  RealArray mag = rec.abs();
  const double mx = mag.maxCoeff();
  if (mx > 0.0) mag /= mx;
  write_pgm(join_path(common.out_dir, "recon.pgm"), mag);
  write_pgm(join_path(common.out_dir, "error.pgm"), error_map(rec, truth_combined));
  std::cout << "wrote recon.pgm and error.pgm (" << rec.rows() << " x " << rec.cols() << ")\n";
  return 0;
}

}  // namespace

int cli_main(int argc, const char *const *argv)
{
  CLI::App app{"SPIRiT-shaped diffusion MRI reconstruction toolkit"};
  app.require_subcommand(1);

  CommonArgs sim_c, cal_c, train_c, rec_c, render_c;

  auto *sim = app.add_subcommand("simulate", "generate phantom, maps, mask and k-space data");
  add_common(sim, sim_c);
  long long accel = 0, acs_override = 0;
  auto *accel_opt = sim->add_option("--acceleration", accel, "undersampling factor (overrides mask.r)");
  auto *acs_opt = sim->add_option("--acs", acs_override, "calibration lines (overrides mask.acs)");

  auto *cal = app.add_subcommand("calibrate", "fit the interpolation kernel from the ACS block");
  add_common(cal, cal_c);

  auto *train = app.add_subcommand("train-score", "fit per-bin linear score tables by denoising");
  add_common(train, train_c);

  auto *rec = app.add_subcommand("recon", "reconstruct undersampled k-space");
  add_common(rec, rec_c);
  std::string method;
  rec->add_option("--method", method, "zf | cgspirit | vesde | spiritdiff")
      ->required()
      ->check(CLI::IsMember({"zf", "cgspirit", "vesde", "spiritdiff"}));
  long long steps_flag = 0;
  double eta_flag = 0.0, beta_flag = 0.0;
  auto *steps_opt = rec->add_option("--steps", steps_flag, "sampler steps (overrides recon.steps)");
  auto *eta_opt = rec->add_option("--eta-max", eta_flag, "drift rate at t = T (overrides sde.eta_max)");
  auto *beta_opt =
      rec->add_option("--beta-max", beta_flag, "noise rate at t = T (overrides sde.beta_max)");

  auto *met = app.add_subcommand("metrics", "compare two containers");
  std::string a_path, b_path, csv_path, label = "pair";
  met->add_option("--a", a_path, "candidate container")->required();
  met->add_option("--b", b_path, "reference container")->required();
  met->add_option("--csv", csv_path, "append a row to this csv");
  met->add_option("--label", label, "method column for the csv row");

  auto *ren = app.add_subcommand("render", "write grayscale reconstruction and error images");
  add_common(ren, render_c);
  std::string recon_path;
  ren->add_option("--recon", recon_path, "reconstruction container")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) return run_simulate(sim_c, accel_opt, accel, acs_opt, acs_override);
    if (cal->parsed()) return run_calibrate(cal_c);
    if (train->parsed()) return run_train(train_c);
    if (rec->parsed())
      return run_recon(rec_c, method, steps_opt, steps_flag, eta_opt, eta_flag, beta_opt, beta_flag);
    if (met->parsed()) return run_metrics(a_path, b_path, csv_path, label);
    if (ren->parsed()) return run_render(render_c, recon_path);
  } catch (const ConfigError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const MissingInputError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const ContainerError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace spiritdiff
