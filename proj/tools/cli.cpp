#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>

#include "nlos/error.hpp"
#include "nlos/forward.hpp"
#include "nlos/io.hpp"
#include "nlos/metrics.hpp"
#include "nlos/optim.hpp"

namespace nlos::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double kPicosecond = 1e-12;

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json format_versions() {
  return {{"ntv", kNtvVersion}, {"pgm", "P5 maxval 65535"}, {"params", 1}, {"csv", 1}};
}

/// Provenance block shared by every output. The timestamp is the only
/// non-deterministic field.
json provenance(const std::vector<std::string>& args, const json& config) {
  return {{"tool", "nlos"}, {"argv", args}, {"config", config}, {"formats", format_versions()}};
}

void write_meta(const fs::path& output, json prov) {
  prov["generated_utc"] = utc_timestamp();
  fs::path meta = output;
  meta += ".meta.json";
  write_file_atomic(meta, prov.dump(1) + "\n");
}

std::string csv_footer(const json& prov) {
  return "# provenance " + prov.dump() + "\n# generated_utc " + utc_timestamp() + "\n";
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

struct GridOptions {
  std::size_t nx = 32;
  std::size_t ny = 32;
  std::size_t nt = 512;
  double bin_ps = 33.0;
  double extent = 2.0;

  void add(CLI::App* app) {
    app->add_option("--nx", nx, "scan points along x")->capture_default_str();
    app->add_option("--ny", ny, "scan points along y")->capture_default_str();
    app->add_option("--nt", nt, "time bins")->capture_default_str();
    app->add_option("--bin-ps", bin_ps, "bin width in picoseconds")->capture_default_str();
    app->add_option("--extent", extent, "scan width and height in meters")->capture_default_str();
  }
  ApertureGrid grid() const { return ApertureGrid::centered(nx, ny, extent); }
  json to_json() const { return {{"nx", nx}, {"ny", ny}, {"nt", nt}, {"bin_ps", bin_ps}, {"extent_m", extent}}; }
};

struct VolumeOptions {
  double zmin = 0.25;
  double zmax = 2.25;
  std::size_t nvz = 32;
  std::optional<double> lambda_c;
  double band_threshold = kDefaultBandThreshold;

  void add(CLI::App* app) {
    app->add_option("--zmin", zmin, "near edge of the hidden volume (m)")->capture_default_str();
    app->add_option("--zmax", zmax, "far edge of the hidden volume (m)")->capture_default_str();
    app->add_option("--nvz", nvz, "depth planes")->capture_default_str();
    app->add_option("--lambda-c", lambda_c, "virtual carrier wavelength (m), default 4x scan spacing");
    app->add_option("--band-threshold", band_threshold, "retain frequencies above this fraction of the peak")
        ->capture_default_str();
  }
  PipelineSetup setup(const ApertureGrid& grid, std::size_t nt, double bin_width) const {
    PipelineSetup s = PipelineSetup::make(grid, nt, bin_width, nvz, zmin, zmax, lambda_c);
    s.band_threshold = band_threshold;
    return s;
  }
  json to_json() const {
    return {{"zmin_m", zmin}, {"zmax_m", zmax}, {"nvz", nvz}, {"lambda_c_m", lambda_c ? json(*lambda_c) : json()},
            {"band_threshold", band_threshold}};
  }
};

struct CompensationChoice {
  Compensation compensation;
  std::optional<double> learned_sigma;
};

CompensationChoice parse_compensation(const std::string& spec, const TransientVolume& measurement) {
  if (spec == "none") return {NoCompensation{}, std::nullopt};
  if (spec == "1" || spec == "2" || spec == "4") return {FixedCompensation{std::stoi(spec)}, std::nullopt};
  if (!fs::exists(spec)) {
    fail(ErrorCategory::UsageError, "--comp-exp expects 1, 2, 4, none or a parameter file, got '" + spec + "'");
  }
  ParamsFile params = load_params(spec);
  if (params.lpc.nx != measurement.nx() || params.lpc.ny != measurement.ny()) {
    fail(ErrorCategory::ShapeMismatch, "parameter file was trained on a different scan lattice");
  }
  std::optional<double> sigma;
  if (!params.apf.empty()) sigma = apf_sigma(params.apf.front(), params.bin_width_s);
  return {std::move(params.lpc), sigma};
}

double resolve_sigma(const std::optional<double>& sigma_ps, const CompensationChoice& comp, const PipelineSetup& setup) {
  if (sigma_ps) return *sigma_ps * kPicosecond;
  if (comp.learned_sigma) return *comp.learned_sigma;
  return setup.default_sigma();
}

std::vector<std::string> split_values(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  if (out.empty()) fail(ErrorCategory::UsageError, "--values needs at least one entry");
  return out;
}

double parse_number(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(ErrorCategory::UsageError, what + " '" + s + "' is not a number");
  }
}

// --- render ------------------------------------------------------------------

struct RenderCmd {
  std::string scene;
  std::string out;
  std::optional<double> snr_db;
  std::uint64_t seed = 0;
  std::string gt_i;
  std::string gt_d;
  std::string gt_kind = "albedo";
  GridOptions grid;
  VolumeOptions volume;

  void add(CLI::App& root) {
    CLI::App* app = root.add_subcommand("render", "render a scene into an NTV transient");
    app->add_option("--scene", scene, "scene description (YAML)")->required();
    app->add_option("--out", out, "output NTV file")->required();
    app->add_option("--snr-db", snr_db, "add SPAD Poisson noise at this SNR");
    app->add_option("--seed", seed, "noise seed")->capture_default_str();
    app->add_option("--gt-i", gt_i, "also write the ground-truth intensity image");
    app->add_option("--gt-d", gt_d, "also write the ground-truth depth image");
    app->add_option("--gt-kind", gt_kind,
                    "albedo: voxelized albedo projection; unattenuated: reconstruction of a fall-off-free render")
        ->check(CLI::IsMember({"albedo", "unattenuated"}))
        ->capture_default_str();
    grid.add(app);
    volume.add(app);
  }

  void run(const std::vector<std::string>& args, std::ostream& out_stream) const {
    const Scene s = load_scene(scene);
    const ApertureGrid g = grid.grid();
    const double dt = grid.bin_ps * kPicosecond;
    TransientVolume tv = render_transient(s, g, grid.nt, dt);
    json config = grid.to_json();
    config["scene"] = scene;
    config["scene_name"] = s.name;
    config["points"] = s.points.size();
    config["seed"] = seed;
    if (snr_db) {
      const NoiseConfig noise = NoiseConfig::from_snr(*snr_db, seed);
      config["snr_db"] = *snr_db;
      config["background_photons_per_bin"] = spad_background(tv, noise);
      config["snr_mapping"] = "B = mean(positive bins) / 10^(snr_db/10)";
      tv = add_spad_noise(tv, noise);
    }
    write_ntv(out, tv);
    if (!gt_i.empty() || !gt_d.empty()) {
      const PipelineSetup setup = volume.setup(g, grid.nt, dt);
      const Views gt = gt_kind == "albedo" ? albedo_ground_truth(s, setup)
                                            : unattenuated_reference(s, setup, setup.default_sigma());
      config["volume"] = volume.to_json();
      config["gt_kind"] = gt_kind;
      if (!gt_i.empty()) write_image(gt_i, gt.intensity, std::nullopt);
      if (!gt_d.empty()) write_image(gt_d, gt.depth, DepthRange{volume.zmin, volume.zmax});
    }
    write_meta(out, provenance(args, config));
    out_stream << "wrote " << out << "\n";
  }
};

// --- reconstruct ----------------------------------------------------------------

struct ReconstructCmd {
  std::string in;
  std::optional<double> sigma_ps;
  std::string comp = "none";
  std::string out_i;
  std::string out_d;
  bool oracle = false;
  VolumeOptions volume;

  void add(CLI::App& root) {
    CLI::App* app = root.add_subcommand("reconstruct", "phasor-field reconstruction of an NTV transient");
    app->add_option("--in", in, "input NTV file")->required();
    app->add_option("--sigma-ps", sigma_ps, "illumination window width (ps)");
    app->add_option("--comp-exp", comp, "path compensation: none, 1, 2, 4 or a trained parameter file")
        ->capture_default_str();
    app->add_option("--out-intensity", out_i, "intensity PGM")->required();
    app->add_option("--out-depth", out_d, "depth PGM")->required();
    app->add_flag("--oracle", oracle, "use the direct (non-FFT) propagation");
    volume.add(app);
  }

  void run(const std::vector<std::string>& args, std::ostream& out_stream) const {
    const TransientVolume tv = read_ntv(in);
    if (tv.is_complex()) fail(ErrorCategory::InvalidArgument, "reconstruct expects a real-valued transient");
    const PipelineSetup setup = volume.setup(tv.aperture(), tv.nt(), tv.bin_width());
    const CompensationChoice c = parse_compensation(comp, tv);
    const double sigma = resolve_sigma(sigma_ps, c, setup);
    const Views views = reconstruct(tv, setup, c.compensation, sigma, RenderMode::hard(), oracle);
    write_image(out_i, views.intensity, std::nullopt);
    write_image(out_d, views.depth, DepthRange{volume.zmin, volume.zmax});
    json config = volume.to_json();
    config["in"] = in;
    config["comp_exp"] = comp;
    config["sigma_s"] = sigma;
    config["lambda_c_m"] = setup.central_wavelength();
    config["oracle"] = oracle;
    write_meta(out_i, provenance(args, config));
    out_stream << "wrote " << out_i << " and " << out_d << "\n";
  }
};

// --- train ---------------------------------------------------------------------

struct TrainCmd {
  std::string scenes;
  std::string out;
  int epochs = 50;
  double lr = 6e-5;
  std::optional<double> snr_db;
  std::uint64_t seed = 0;
  double tau = 0.05;
  double lambda = 1.0;
  double lr_decay = 0.95;
  double l2_decay = 0.0;
  std::string optimizer = "adam";
  std::string gt = "albedo";
  GridOptions grid;
  VolumeOptions volume;

  void add(CLI::App& root) {
    CLI::App* app = root.add_subcommand("train", "learn path compensation and window width");
    app->add_option("--scenes", scenes, "directory of scene files (*.yaml)")->required();
    app->add_option("--out", out, "output parameter file")->required();
    app->add_option("--epochs", epochs)->capture_default_str();
    app->add_option("--lr", lr, "learning rate")->capture_default_str();
    app->add_option("--snr-db", snr_db, "SPAD noise level for every training scene");
    app->add_option("--seed", seed)->capture_default_str();
    app->add_option("--tau", tau, "soft-render temperature")->capture_default_str();
    app->add_option("--lambda", lambda, "depth loss weight")->capture_default_str();
    app->add_option("--lr-decay", lr_decay, "multiplicative learning-rate decay per epoch")->capture_default_str();
    app->add_option("--l2-decay", l2_decay, "L2 coefficient on the parameters")->capture_default_str();
    app->add_option("--optimizer", optimizer)->check(CLI::IsMember({"adam", "gd"}))->capture_default_str();
    app->add_option("--gt", gt, "supervision: albedo projection or matched reference")
        ->check(CLI::IsMember({"albedo", "matched"}))
        ->capture_default_str();
    grid.add(app);
    volume.add(app);
  }

  void run(const std::vector<std::string>& args, std::ostream& out_stream) const {
    std::vector<fs::path> files;
    if (!fs::is_directory(scenes)) fail(ErrorCategory::IoError, scenes + " is not a directory");
    for (const auto& entry : fs::directory_iterator(scenes)) {
      const auto ext = entry.path().extension();
      if (entry.is_regular_file() && (ext == ".yaml" || ext == ".yml")) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) fail(ErrorCategory::InvalidArgument, "no scene files in " + scenes);

    std::vector<TrainingScene> dataset;
    for (const auto& f : files) dataset.push_back({load_scene(f), snr_db});
    const ApertureGrid g = grid.grid();
    const double dt = grid.bin_ps * kPicosecond;
    const PipelineSetup setup = volume.setup(g, grid.nt, dt);

    TrainConfig cfg;
    cfg.learning_rate = lr;
    cfg.epochs = epochs;
    cfg.optimizer = optimizer == "gd" ? OptimizerKind::plain_gd : OptimizerKind::adaptive_moment;
    cfg.lr_decay = lr_decay;
    cfg.l2_decay = l2_decay;
    cfg.tau = tau;
    cfg.loss.lambda = lambda;
    cfg.seed = seed;
    cfg.ground_truth = gt == "matched" ? GroundTruthMode::matched_reference : GroundTruthMode::albedo_projection;
    const TrainResult result = train(dataset, setup, cfg);

    json config = grid.to_json();
    config.update(volume.to_json());
    config["scenes"] = scenes;
    config["scene_files"] = [&] {
      std::vector<std::string> names;
      for (const auto& f : files) names.push_back(f.filename().string());
      return names;
    }();
    config["epochs"] = epochs;
    config["lr"] = lr;
    config["lr_decay"] = lr_decay;
    config["l2_decay"] = l2_decay;
    config["optimizer"] = optimizer;
    config["tau"] = tau;
    config["lambda"] = lambda;
    config["gt"] = gt;
    config["seed"] = seed;
    config["snr_db"] = snr_db ? json(*snr_db) : json();
    config["best_epoch"] = result.best_epoch;
    config["best_loss"] = result.best_loss.total;
    const json prov = provenance(args, config);

    save_params(out, {result.lpc, result.apf, dt, prov.dump()});
    std::ostringstream hist;
    hist << "epoch,loss,loss_intensity,loss_depth\n";
    for (std::size_t e = 0; e < result.history.size(); ++e) {
      const auto& h = result.history[e];
      hist << e << ',' << fmt(h.total) << ',' << fmt(h.intensity) << ',' << fmt(h.depth) << '\n';
    }
    hist << csv_footer(prov);
    fs::path hist_path = out;
    hist_path += ".history.csv";
    write_file_atomic(hist_path, hist.str());
    out_stream << "trained " << epochs << " epochs, best loss " << fmt(result.best_loss.total) << " at epoch "
               << result.best_epoch << "\n";
  }
};

// --- eval ------------------------------------------------------------------------

struct EvalCmd {
  std::string pred_i;
  std::string gt_i;
  std::string pred_d;
  std::string gt_d;
  double crop = kDefaultCropFraction;
  std::string out;

  void add(CLI::App& root) {
    CLI::App* app = root.add_subcommand("eval", "intensity and depth metrics against ground truth");
    app->add_option("--pred-i", pred_i, "reconstructed intensity PGM")->required();
    app->add_option("--gt-i", gt_i, "ground-truth intensity PGM")->required();
    app->add_option("--pred-d", pred_d, "reconstructed depth PGM");
    app->add_option("--gt-d", gt_d, "ground-truth depth PGM");
    app->add_option("--crop", crop, "central crop fraction")->capture_default_str();
    app->add_option("--out", out, "report CSV")->required();
  }

  void run(const std::vector<std::string>& args, std::ostream& out_stream) const {
    if (pred_d.empty() != gt_d.empty()) fail(ErrorCategory::UsageError, "--pred-d and --gt-d go together");
    if (!(crop > 0.0 && crop <= 1.0)) fail(ErrorCategory::DegenerateCrop, "crop fraction must lie in (0, 1]");
    const Image pi = center_crop(read_image(pred_i).image, crop);
    const Image gi = center_crop(read_image(gt_i).image, crop);
    std::ostringstream csv;
    csv << "metric,value\n";
    csv << "psnr_db," << fmt(psnr_capped(psnr(gi, pi))) << '\n';
    const SsimConfig ssim_cfg;
    if (gi.width >= static_cast<std::size_t>(ssim_cfg.window) && gi.height >= static_cast<std::size_t>(ssim_cfg.window)) {
      csv << "ssim," << fmt(ssim(gi, pi, ssim_cfg)) << '\n';
    } else {
      // Still validates shapes.
      (void)psnr(gi, pi);
      csv << "ssim,NA\n";
    }
    if (!pred_d.empty()) {
      const Image pd = center_crop(read_image(pred_d).image, crop);
      const Image gd = center_crop(read_image(gt_d).image, crop);
      const DepthErrors e = depth_errors(gd, pd, foreground_mask(gi));
      csv << "rmse_m," << fmt(e.rmse) << '\n';
      csv << "mad_m," << fmt(e.mad) << '\n';
    }
    json config{{"crop_fraction", crop},
                {"ssim", {{"window", ssim_cfg.window}, {"gaussian_sigma", ssim_cfg.gaussian_sigma},
                          {"k1", ssim_cfg.k1}, {"k2", ssim_cfg.k2}, {"peak", ssim_cfg.peak}}},
                {"depth_mask", "gt intensity >= 1e-3"},
                {"psnr_cap_db", kPsnrCap}};
    csv << csv_footer(provenance(args, config));
    write_file_atomic(out, csv.str());
    out_stream << "wrote " << out << "\n";
  }
};

// --- sweep ------------------------------------------------------------------------

struct SweepCmd {
  std::string in;
  std::string param;
  std::string values;
  std::string metric = "psnr";
  std::string gt_i;
  std::string out;
  std::optional<double> sigma_ps;
  std::string comp = "none";
  double crop = 1.0;
  VolumeOptions volume;

  void add(CLI::App& root) {
    CLI::App* app = root.add_subcommand("sweep", "reconstruction quality as one setting varies");
    app->add_option("--in", in, "input NTV file")->required();
    app->add_option("--param", param, "swept setting")->check(CLI::IsMember({"sigma", "comp-exp"}))->required();
    app->add_option("--values", values, "comma-separated values (sigma in ps)")->required();
    app->add_option("--metric", metric)->check(CLI::IsMember({"psnr"}))->capture_default_str();
    app->add_option("--gt-i", gt_i, "ground-truth intensity PGM")->required();
    app->add_option("--out", out, "sweep CSV")->required();
    app->add_option("--sigma-ps", sigma_ps, "fixed window width when sweeping compensation");
    app->add_option("--comp-exp", comp, "fixed compensation when sweeping sigma")->capture_default_str();
    app->add_option("--crop", crop, "central crop fraction")->capture_default_str();
    volume.add(app);
  }

  void run(const std::vector<std::string>& args, std::ostream& out_stream) const {
    const TransientVolume tv = read_ntv(in);
    if (tv.is_complex()) fail(ErrorCategory::InvalidArgument, "sweep expects a real-valued transient");
    const PipelineSetup setup = volume.setup(tv.aperture(), tv.nt(), tv.bin_width());
    const Image gt = center_crop(read_image(gt_i).image, crop);
    const auto items = split_values(values);

    std::ostringstream csv;
    csv << "param,value,psnr_db\n";
    for (const auto& item : items) {
      CompensationChoice c;
      double sigma = 0.0;
      if (param == "sigma") {
        c = parse_compensation(comp, tv);
        sigma = parse_number(item, "sigma") * kPicosecond;
      } else {
        if (item != "1" && item != "2" && item != "4") {
          fail(ErrorCategory::UsageError, "compensation exponents must be 1, 2 or 4, got '" + item + "'");
        }
        c = {FixedCompensation{std::stoi(item)}, std::nullopt};
        sigma = resolve_sigma(sigma_ps, c, setup);
      }
      const Views v = reconstruct(tv, setup, c.compensation, sigma, RenderMode::hard());
      csv << param << ',' << item << ',' << fmt(psnr_capped(psnr(gt, center_crop(v.intensity, crop)))) << '\n';
    }
    json config = volume.to_json();
    config["in"] = in;
    config["param"] = param;
    config["values"] = values;
    config["metric"] = metric;
    config["crop_fraction"] = crop;
    config["comp_exp"] = comp;
    config["sigma_ps"] = sigma_ps ? json(*sigma_ps) : json();
    csv << csv_footer(provenance(args, config));
    write_file_atomic(out, csv.str());
    out_stream << "wrote " << out << "\n";
  }
};

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Non-line-of-sight transient simulation and phasor-field reconstruction", "nlos"};
  app.require_subcommand(1);
  RenderCmd render;
  ReconstructCmd reconstruct_cmd;
  TrainCmd train_cmd;
  EvalCmd eval;
  SweepCmd sweep;
  render.add(app);
  reconstruct_cmd.add(app);
  train_cmd.add(app);
  eval.add(app);
  sweep.add(app);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: UsageError: " << one_line(e.what()) << "\n";
    return 2;
  }

  try {
    if (app.got_subcommand("render")) render.run(args, out);
    if (app.got_subcommand("reconstruct")) reconstruct_cmd.run(args, out);
    if (app.got_subcommand("train")) train_cmd.run(args, out);
    if (app.got_subcommand("eval")) eval.run(args, out);
    if (app.got_subcommand("sweep")) sweep.run(args, out);
  } catch (const Error& e) {
    err << "error: " << category_name(e.category()) << ": " << one_line(e.what()) << "\n";
    return e.category() == ErrorCategory::UsageError ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: IoError: " << one_line(e.what()) << "\n";
    return 1;
  }
  return 0;
}

}  // namespace nlos::cli
