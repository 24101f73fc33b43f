#include "nlos/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "nlos/error.hpp"

namespace nlos {
namespace {

void check_same(const Image& a, const Image& b) {
  if (!a.same_shape(b)) fail(ErrorCategory::ShapeMismatch, "loss images differ in shape");
}

double mse(const Image& a, const Image& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

struct ForwardPass {
  TransientVolume compensated;
  SpectrumWindow window;
  ReconVolume volume;
  Views views;
  LossValue loss;
};

ForwardPass run_forward(const Sample& sample, const PipelineSetup& setup, const LpcParams& lpc, const ApfParams& apf,
                        const PipelineOptions& options) {
  if (!(options.tau > 0.0)) fail(ErrorCategory::InvalidArgument, "training needs soft rendering with tau > 0");
  TransientVolume compensated =
      options.use_lpc ? lpc_forward(sample.measurement, lpc, setup.weights()) : sample.measurement;
  SpectrumWindow window = apf_window(apf, setup.nt, setup.bin_width, setup.omega_c, setup.band_threshold,
                                     options.frozen_mask);
  ReconVolume volume = rsd_propagate(apply_illumination(compensated, window), setup.geom, window);
  Views views = render_views(volume, RenderMode::soft(options.tau));
  LossValue loss = total_loss(sample.gt_intensity, views.intensity, sample.gt_depth, views.depth, options.loss);
  return {std::move(compensated), std::move(window), std::move(volume), std::move(views), loss};
}

class Adam {
 public:
  explicit Adam(std::size_t n) : m_(n, 0.0), v_(n, 0.0) {}

  void step(std::span<double> params, std::span<const double> grad, double lr, const TrainConfig& cfg) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double g = grad[i] + cfg.l2_decay * params[i];
      m_[i] = cfg.beta1 * m_[i] + (1.0 - cfg.beta1) * g;
      v_[i] = cfg.beta2 * v_[i] + (1.0 - cfg.beta2) * g * g;
      params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + cfg.epsilon);
    }
  }

 private:
  std::vector<double> m_;
  std::vector<double> v_;
  long t_ = 0;
};

void gd_step(std::span<double> params, std::span<const double> grad, double lr, const TrainConfig& cfg) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * (grad[i] + cfg.l2_decay * params[i]);
}

}  // namespace

LossValue total_loss(const Image& gt_intensity, const Image& intensity, const Image& gt_depth, const Image& depth,
                     LossWeights weights) {
  check_same(gt_intensity, intensity);
  check_same(gt_depth, depth);
  check_same(gt_intensity, gt_depth);
  LossValue v;
  v.intensity = mse(gt_intensity, intensity);
  v.depth = mse(gt_depth, depth);
  v.total = v.intensity + weights.lambda * v.depth;
  return v;
}

PipelineSetup PipelineSetup::make(const ApertureGrid& aperture, std::size_t nt, double bin_width, std::size_t nvz,
                                  double z_min, double z_max, std::optional<double> central_wavelength) {
  const double lambda_c = central_wavelength.value_or(default_central_wavelength(aperture));
  if (!(lambda_c > 0.0)) fail(ErrorCategory::InvalidArgument, "central wavelength must be positive");
  return {aperture, nt, bin_width, recon_geometry_for(aperture, nvz, z_min, z_max), omega_from_wavelength(lambda_c),
          kDefaultBandThreshold};
}

double PipelineSetup::central_wavelength() const { return 2.0 * std::numbers::pi * (kSpeedOfLight / 2.0) / omega_c; }

double PipelineSetup::default_sigma() const { return nlos::default_sigma(central_wavelength()); }

CompensationWeights PipelineSetup::weights() const { return compensation_weights(distance_grid(nt, bin_width)); }

ReconVolume reconstruct_volume(const TransientVolume& measurement, const PipelineSetup& setup,
                               const Compensation& compensation, double sigma, bool oracle) {
  TransientVolume compensated = std::visit(
      [&](const auto& c) -> TransientVolume {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, NoCompensation>) {
          return measurement;
        } else if constexpr (std::is_same_v<T, FixedCompensation>) {
          return compensate_fixed(measurement, compensation_weights(distance_grid(measurement.nt(),
                                                                                  measurement.bin_width())),
                                  c.exponent);
        } else {
          return lpc_forward(measurement, c,
                             compensation_weights(distance_grid(measurement.nt(), measurement.bin_width())));
        }
      },
      compensation);
  const SpectrumWindow window =
      gaussian_window(sigma, measurement.nt(), measurement.bin_width(), setup.omega_c, setup.band_threshold);
  const TransientVolume phasor = apply_illumination(compensated, window);
  return oracle ? rsd_propagate_direct(phasor, setup.geom, window) : rsd_propagate(phasor, setup.geom, window);
}

Views reconstruct(const TransientVolume& measurement, const PipelineSetup& setup, const Compensation& compensation,
                  double sigma, RenderMode mode, bool oracle) {
  return render_views(reconstruct_volume(measurement, setup, compensation, sigma, oracle), mode);
}

Views albedo_ground_truth(const Scene& scene, const PipelineSetup& setup) {
  const ReconGeometry& g = setup.geom;
  const ApertureGrid& a = setup.aperture;
  const double sx = a.extent() / static_cast<double>(g.nvx - 1);
  const double sy = a.extent() / static_cast<double>(g.nvy - 1);
  Image best_albedo(g.nvx, g.nvy, -1.0);
  Views views{Image(g.nvx, g.nvy), Image(g.nvx, g.nvy)};
  auto clamp_index = [](double v, std::size_t n) {
    return static_cast<std::size_t>(std::clamp(v, 0.0, static_cast<double>(n - 1)));
  };
  for (const auto& p : scene.points) {
    const std::size_t ix = clamp_index(std::round((p.position.x - a.origin().x) / sx), g.nvx);
    const std::size_t iy = clamp_index(std::round((p.position.y - a.origin().y) / sy), g.nvy);
    const std::size_t iz = clamp_index(std::floor((p.position.z - g.z_min) / g.dz()), g.nvz);
    if (p.albedo > best_albedo.at(ix, iy)) {
      best_albedo.at(ix, iy) = p.albedo;
      views.depth.at(ix, iy) = p.albedo > 0.0 ? g.z_center(iz) : 0.0;
    }
  }
  double peak = 0.0;
  for (double v : best_albedo.data) peak = std::max(peak, v);
  for (std::size_t i = 0; i < best_albedo.size(); ++i) {
    views.intensity.data[i] = peak > 0.0 && best_albedo.data[i] > 0.0 ? best_albedo.data[i] / peak : 0.0;
  }
  return views;
}

Views matched_ground_truth(const Scene& scene, const PipelineSetup& setup, double sigma, RenderMode mode) {
  const TransientVolume reference = render_transient(scene, setup.aperture, setup.nt, setup.bin_width, Radiometry::compensated_residual);
  return reconstruct(reference, setup, NoCompensation{}, sigma, mode);
}

Views unattenuated_reference(const Scene& scene, const PipelineSetup& setup, double sigma) {
  const TransientVolume reference = render_transient(scene, setup.aperture, setup.nt, setup.bin_width, Radiometry::unattenuated);
  return reconstruct(reference, setup, NoCompensation{}, sigma, RenderMode::hard());
}

LossValue pipeline_loss(const Sample& sample, const PipelineSetup& setup, const LpcParams& lpc, const ApfParams& apf,
                        const PipelineOptions& options) {
  return run_forward(sample, setup, lpc, apf, options).loss;
}

PipelineGradients backprop_pipeline(const Sample& sample, const PipelineSetup& setup, const LpcParams& lpc,
                                    const ApfParams& apf, const PipelineOptions& options) {
  const ForwardPass fwd = run_forward(sample, setup, lpc, apf, options);
  const double n = static_cast<double>(sample.gt_intensity.size());
  Image grad_i(sample.gt_intensity.width, sample.gt_intensity.height);
  Image grad_d(sample.gt_depth.width, sample.gt_depth.height);
  for (std::size_t i = 0; i < grad_i.size(); ++i) {
    grad_i.data[i] = 2.0 * (fwd.views.intensity.data[i] - sample.gt_intensity.data[i]) / n;
    grad_d.data[i] = 2.0 * options.loss.lambda * (fwd.views.depth.data[i] - sample.gt_depth.data[i]) / n;
  }

  const ReconVolume grad_volume{setup.geom, render_views_soft_backward(fwd.volume, options.tau, grad_i, grad_d)};
  const TransientVolume grad_phasor = rsd_adjoint(grad_volume, setup.aperture, setup.nt, fwd.window);

  PipelineGradients out;
  out.loss = fwd.loss;
  out.s = apf_backward(fwd.compensated, apf, setup.omega_c, setup.band_threshold, grad_phasor, &fwd.window.band_mask);
  if (options.use_lpc) {
    const TransientVolume grad_complex = apply_illumination_adjoint(grad_phasor, fwd.window);
    TransientVolume grad_real(setup.aperture, setup.nt, setup.bin_width, VolumeKind::clean_real);
    for (std::size_t i = 0; i < grad_real.real().size(); ++i) grad_real.real()[i] = grad_complex.phasor()[i].real();
    out.logits = lpc_backward(sample.measurement, lpc, setup.weights(), grad_real);
  } else {
    out.logits.assign(lpc.logits.size(), 0.0);
  }
  return out;
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    fail(ErrorCategory::InvalidArgument, "learning rate must be finite and >= 0");
  }
  if (epochs < 1) fail(ErrorCategory::InvalidArgument, "epochs must be >= 1");
  if (!(tau > 0.0)) fail(ErrorCategory::InvalidArgument, "soft-render temperature must be positive");
  if (!(loss.lambda >= 0.0) || !std::isfinite(loss.lambda)) {
    fail(ErrorCategory::InvalidArgument, "loss weight lambda must be finite and >= 0");
  }
}

Sample prepare_sample(const TrainingScene& item, const PipelineSetup& setup, const TrainConfig& config,
                      std::uint64_t noise_seed) {
  TransientVolume measurement = render_transient(item.scene, setup.aperture, setup.nt, setup.bin_width);
  if (item.snr_db) measurement = add_spad_noise(measurement, NoiseConfig::from_snr(*item.snr_db, noise_seed));
  const double sigma = config.initial_sigma.value_or(setup.default_sigma());
  Views gt = config.ground_truth == GroundTruthMode::albedo_projection
                 ? albedo_ground_truth(item.scene, setup)
                 : matched_ground_truth(item.scene, setup, sigma, RenderMode::soft(config.tau));
  return {std::move(measurement), std::move(gt.intensity), std::move(gt.depth)};
}

TrainResult train(const std::vector<TrainingScene>& dataset, const PipelineSetup& setup, const TrainConfig& config) {
  if (dataset.empty()) fail(ErrorCategory::InvalidArgument, "training needs at least one scene");
  std::vector<Sample> samples;
  samples.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    samples.push_back(prepare_sample(dataset[i], setup, config, stream_seed(config.seed, i, 0x5eed)));
  }
  return train_samples(samples, setup, config);
}

TrainResult train_samples(const std::vector<Sample>& samples, const PipelineSetup& setup, const TrainConfig& config) {
  config.validate();
  if (samples.empty()) fail(ErrorCategory::InvalidArgument, "training needs at least one sample");
  const double sigma0 = config.initial_sigma.value_or(setup.default_sigma());

  LpcParams lpc = LpcParams::uniform(setup.aperture.nx(), setup.aperture.ny());
  std::vector<ApfParams> apf(samples.size(), apf_params_for_sigma(sigma0, setup.bin_width));
  Adam lpc_opt(lpc.logits.size());
  std::vector<Adam> apf_opt(samples.size(), Adam(1));
  PipelineOptions options{config.tau, config.loss, config.apply_lpc, nullptr};

  auto mean_loss = [&](const LpcParams& l, const std::vector<ApfParams>& a) {
    LossValue acc;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const LossValue v = pipeline_loss(samples[i], setup, l, a[i], options);
      acc.total += v.total;
      acc.intensity += v.intensity;
      acc.depth += v.depth;
    }
    const double n = static_cast<double>(samples.size());
    return LossValue{acc.total / n, acc.intensity / n, acc.depth / n};
  };

  TrainResult result;
  result.lpc = lpc;
  result.apf = apf;
  double lr = config.learning_rate;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const LpcParams lpc_start = lpc;
    const std::vector<ApfParams> apf_start = apf;
    LossValue acc;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      PipelineGradients g = backprop_pipeline(samples[i], setup, lpc, apf[i], options);
      if (!std::isfinite(g.loss.total)) {
        fail(ErrorCategory::NonFiniteLoss, "non-finite loss at epoch " + std::to_string(epoch));
      }
      acc.total += g.loss.total;
      acc.intensity += g.loss.intensity;
      acc.depth += g.loss.depth;
      if (lr > 0.0) {
        if (config.train_lpc && config.apply_lpc) {
          if (config.optimizer == OptimizerKind::adaptive_moment) {
            lpc_opt.step(lpc.logits, g.logits, lr, config);
          } else {
            gd_step(lpc.logits, g.logits, lr, config);
          }
        }
        if (config.train_apf) {
          double gs[1] = {g.s};
          double* ps = &apf[i].s;
          if (config.optimizer == OptimizerKind::adaptive_moment) {
            apf_opt[i].step(std::span<double>(ps, 1), gs, lr, config);
          } else {
            gd_step(std::span<double>(ps, 1), gs, lr, config);
          }
        }
      }
    }
    const double n = static_cast<double>(samples.size());
    const LossValue mean{acc.total / n, acc.intensity / n, acc.depth / n};
    result.history.push_back(mean);
    if (epoch == 0 || mean.total < result.best_loss.total) {
      result.best_loss = mean;
      result.best_epoch = epoch;
      result.lpc = lpc_start;
      result.apf = apf_start;
    }
    lr *= config.lr_decay;
  }

  const LossValue final_loss = mean_loss(lpc, apf);
  if (!std::isfinite(final_loss.total)) {
    fail(ErrorCategory::NonFiniteLoss, "non-finite loss at epoch " + std::to_string(config.epochs));
  }
  if (final_loss.total < result.best_loss.total) {
    result.best_loss = final_loss;
    result.best_epoch = config.epochs;
    result.lpc = lpc;
    result.apf = apf;
  }
  return result;
}

FiniteDiffReport finite_diff_check(const std::function<double(std::span<const double>)>& f,
                                   std::span<const double> params, std::span<const double> analytic, double eps) {
  if (!(eps > 0.0)) fail(ErrorCategory::InvalidArgument, "finite-difference step must be positive");
  if (analytic.size() != params.size()) fail(ErrorCategory::ShapeMismatch, "gradient size differs from parameters");
  FiniteDiffReport report;
  report.numeric.resize(params.size());
  std::vector<double> p(params.begin(), params.end());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double keep = p[i];
    p[i] = keep + eps;
    const double up = f(p);
    p[i] = keep - eps;
    const double down = f(p);
    p[i] = keep;
    report.numeric[i] = (up - down) / (2.0 * eps);
  }
  double scale = 0.0;
  for (double v : report.numeric) scale = std::max(scale, std::abs(v));
  const double floor = 1e-6 * scale;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double denom = std::max(std::abs(analytic[i]), std::abs(report.numeric[i])) + floor;
    if (denom == 0.0) continue;
    report.max_rel_error = std::max(report.max_rel_error, std::abs(analytic[i] - report.numeric[i]) / denom);
  }
  return report;
}

}  // namespace nlos
