#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "nlos/apf.hpp"
#include "nlos/forward.hpp"
#include "nlos/image.hpp"
#include "nlos/lpc.hpp"
#include "nlos/phasor.hpp"

namespace nlos {

struct LossWeights {
  double lambda = 1.0;
};

struct LossValue {
  double total = 0.0;
  double intensity = 0.0;
  double depth = 0.0;
};

/// L = MSE(I, I_hat) + lambda * MSE(D, D_hat).
LossValue total_loss(const Image& gt_intensity, const Image& intensity, const Image& gt_depth, const Image& depth,
                     LossWeights weights = {});

/// Shared acquisition and reconstruction configuration.
struct PipelineSetup {
  ApertureGrid aperture;
  std::size_t nt;
  double bin_width;
  ReconGeometry geom;
  double omega_c;
  double band_threshold = kDefaultBandThreshold;

  /// Defaults: lambda_C = 4x scan spacing unless given.
  static PipelineSetup make(const ApertureGrid& aperture, std::size_t nt, double bin_width, std::size_t nvz,
                            double z_min, double z_max, std::optional<double> central_wavelength = std::nullopt);
  double central_wavelength() const;
  double default_sigma() const;
  CompensationWeights weights() const;
};

/// Which compensation precedes the phasor filter.
struct NoCompensation {};
struct FixedCompensation {
  int exponent = 4;
};
using Compensation = std::variant<NoCompensation, FixedCompensation, LpcParams>;

/// compensation -> illumination filter (sigma) -> RSD -> render.
Views reconstruct(const TransientVolume& measurement, const PipelineSetup& setup, const Compensation& compensation,
                  double sigma, RenderMode mode, bool oracle = false);

/// Same chain, returning the complex volume.
ReconVolume reconstruct_volume(const TransientVolume& measurement, const PipelineSetup& setup,
                               const Compensation& compensation, double sigma, bool oracle = false);

/// Normalized max-projection of voxelized albedo; depth is the center of the
/// strongest-albedo voxel per column, 0 on empty columns.
Views albedo_ground_truth(const Scene& scene, const PipelineSetup& setup);

/// Views the pipeline produces when every scene point's fall-off is undone by
/// its own exponent (residual form), i.e. the output of an ideal per-material
/// path compensation.
Views matched_ground_truth(const Scene& scene, const PipelineSetup& setup, double sigma, RenderMode mode);

/// Hard views of a fall-off-free measurement. Reference for fixed (non-residual)
/// compensation studies.
Views unattenuated_reference(const Scene& scene, const PipelineSetup& setup, double sigma);

enum class GroundTruthMode { albedo_projection, matched_reference };

struct Sample {
  TransientVolume measurement;
  Image gt_intensity;
  Image gt_depth;
};

struct PipelineOptions {
  double tau = 0.05;
  LossWeights loss;
  bool use_lpc = true;
  /// Band mask held fixed while sigma varies (finite-difference checks).
  const std::vector<char>* frozen_mask = nullptr;
};

struct PipelineGradients {
  LossValue loss;
  std::vector<double> logits;
  double s = 0.0;
};

LossValue pipeline_loss(const Sample& sample, const PipelineSetup& setup, const LpcParams& lpc, const ApfParams& apf,
                        const PipelineOptions& options);

/// Exact gradients of pipeline_loss through lpc -> apf -> rsd -> soft render.
PipelineGradients backprop_pipeline(const Sample& sample, const PipelineSetup& setup, const LpcParams& lpc,
                                    const ApfParams& apf, const PipelineOptions& options);

enum class OptimizerKind { plain_gd, adaptive_moment };

struct TrainConfig {
  double learning_rate = 6e-5;
  int epochs = 50;
  OptimizerKind optimizer = OptimizerKind::adaptive_moment;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Multiplicative learning-rate decay applied after every epoch.
  double lr_decay = 0.95;
  /// Optional L2 coefficient on the parameters (the alternative reading of
  /// the decay setting); 0 disables it.
  double l2_decay = 0.0;
  double tau = 0.05;
  LossWeights loss;
  std::uint64_t seed = 0;
  /// Apply path compensation at all; when false the measurement feeds the
  /// illumination filter directly and the logits are untouched.
  bool apply_lpc = true;
  bool train_lpc = true;
  bool train_apf = true;
  GroundTruthMode ground_truth = GroundTruthMode::albedo_projection;
  /// Starting sigma; the setup's default when unset.
  std::optional<double> initial_sigma;

  void validate() const;
};

struct TrainingScene {
  Scene scene;
  std::optional<double> snr_db;
};

/// Renders the measurement (with SPAD noise when snr_db is set) and its
/// supervision images.
Sample prepare_sample(const TrainingScene& item, const PipelineSetup& setup, const TrainConfig& config,
                      std::uint64_t noise_seed);

struct TrainResult {
  LpcParams lpc;
  /// One set per sample (sigma adapts per measurement).
  std::vector<ApfParams> apf;
  /// Mean loss over the dataset per epoch, evaluated before that epoch's updates.
  std::vector<LossValue> history;
  /// Loss of the returned (best) parameters.
  LossValue best_loss;
  int best_epoch = 0;
};

TrainResult train(const std::vector<TrainingScene>& dataset, const PipelineSetup& setup, const TrainConfig& config);

/// Training on already prepared samples.
TrainResult train_samples(const std::vector<Sample>& samples, const PipelineSetup& setup, const TrainConfig& config);

struct FiniteDiffReport {
  double max_rel_error = 0.0;
  std::vector<double> numeric;
};

/// Central differences (f(p + eps e_i) - f(p - eps e_i)) / 2 eps per
/// coordinate compared with `analytic`. The per-coordinate relative error is
/// |a - n| / (max(|a|, |n|) + floor) with floor = 1e-6 * max_i |n_i|.
FiniteDiffReport finite_diff_check(const std::function<double(std::span<const double>)>& f,
                                   std::span<const double> params, std::span<const double> analytic, double eps);

}  // namespace nlos
