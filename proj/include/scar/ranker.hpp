#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "scar/corpus.hpp"
#include "scar/embeddings.hpp"
#include "scar/quality.hpp"

namespace scar {

struct RankerConfig {
    std::size_t dim = 32;      // embedding width M
    std::size_t hidden = 256;  // reward-head width H
    double alpha = 1.0;        // ranking margin
    double beta_p = 0.1;       // form triplet margin
    double beta_c = 0.1;       // surprisal triplet margin
    double lambda_p = 0.1;
    double lambda_c = 0.1;
    double sigma = 2.5;        // quality threshold
    double lr = 1e-3;
    int max_epochs = 20;
    int patience = 3;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;

    void validate() const;
    nlohmann::ordered_json to_json() const;
    /// Overlays the keys present in `j` onto `base`.
    static RankerConfig from_json(const nlohmann::json& j, RankerConfig base);
    static RankerConfig from_json(const nlohmann::json& j);
};

/// Trainable weights, stored contiguously in this order (row-major, y = W x + b):
///   form_w   M x M    form_b   M     v_p = form_w * pooled_y + form_b
///   rel1_w   M x 2M   rel1_b   M     v_c = relu(rel2_w * relu(rel1_w * [cls_x; cls_y] + rel1_b) + rel2_b)
///   rel2_w   M x M    rel2_b   M
///   head1_w  H x 2M   head1_b  H     score = head2_w * relu(head1_w * [v_p; v_c] + head1_b) + head2_b
///   head2_w  1 x H    head2_b  1
/// The same type carries gradients.
class RankerParams {
public:
    enum Tensor : std::size_t {
        form_w, form_b, rel1_w, rel1_b, rel2_w, rel2_b, head1_w, head1_b, head2_w, head2_b,
    };
    static constexpr std::size_t kTensorCount = 10;

    RankerParams() = default;
    RankerParams(std::size_t dim, std::size_t hidden);  // all zeros

    std::size_t dim() const { return dim_; }
    std::size_t hidden() const { return hidden_; }

    std::span<double> operator[](Tensor t);
    std::span<const double> operator[](Tensor t) const;
    std::span<double> flat() { return data_; }
    std::span<const double> flat() const { return data_; }

    /// (rows, cols); biases are (n, 1).
    std::pair<std::size_t, std::size_t> shape(Tensor t) const;

    bool operator==(const RankerParams&) const = default;

private:
    std::size_t dim_ = 0;
    std::size_t hidden_ = 0;
    std::vector<double> data_;
    std::array<std::size_t, kTensorCount + 1> offsets_{};
};

/// Xavier-uniform weights (limit sqrt(6 / (fan_in + fan_out))) drawn in tensor
/// order from Rng(seed); biases zero.
RankerParams init_params(std::size_t dim, std::size_t hidden, std::uint64_t seed);

struct ForwardResult {
    double score = 0.0;
    std::vector<double> v_p;
    std::vector<double> v_c;
};

ForwardResult forward(const RankerParams& params, const EmbeddingRecord& x,
                      const EmbeddingRecord& y);

/// Sum over active pairs (a, b) of max(0, alpha - s_a + s_b) for
/// (d, r), (r, h), (d, h).
double ranking_loss(double s_d, double s_r, double s_h, double alpha, PairMask mask = {});

/// lambda_p * max(0, |p_d - p_r| - |p_r - p_h| + beta_p)
///   + lambda_c * max(0, |c_h - c_r| - |c_d - c_h| + beta_c), Euclidean distances.
double rep_loss(std::span<const double> vp_d, std::span<const double> vp_r,
                std::span<const double> vp_h, std::span<const double> vc_d,
                std::span<const double> vc_r, std::span<const double> vc_h, double beta_p,
                double beta_c, double lambda_p, double lambda_c);

/// Embeddings of one training triplet.
struct TripletView {
    const EmbeddingRecord* instruction = nullptr;
    const EmbeddingRecord* direct = nullptr;
    const EmbeddingRecord* referenced = nullptr;
    const EmbeddingRecord* human = nullptr;
};

/// Looks up "<id>:instruction|direct|referenced|human" for every triplet.
/// Missing keys raise one lookup error listing them.
std::vector<TripletView> resolve_triplets(const TripletSet& ts, const EmbeddingStore& store);

/// Mean over the batch of masked ranking loss plus representation loss.
/// `masks` is empty (all pairs active) or one entry per triplet.
double total_loss(const RankerParams& params, std::span<const TripletView> batch,
                  std::span<const PairMask> masks, const RankerConfig& cfg);

struct LossAndGrad {
    double loss = 0.0;
    RankerParams grad;
};

/// Exact (sub)gradient of total_loss. Hinges and ReLUs take the zero branch
/// when their argument is exactly 0; a zero distance has zero gradient.
LossAndGrad loss_and_grad(const RankerParams& params, std::span<const TripletView> batch,
                          std::span<const PairMask> masks, const RankerConfig& cfg);

RankerParams grad(const RankerParams& params, std::span<const TripletView> batch,
                  std::span<const PairMask> masks, const RankerConfig& cfg);

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::int64_t step = 0;

    static constexpr double beta1 = 0.9;
    static constexpr double beta2 = 0.999;
    static constexpr double eps = 1e-8;
};

/// One bias-corrected Adam update. The state is sized on first use.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double lr);
void adam_step(RankerParams& params, const RankerParams& grads, AdamState& state, double lr);

/// Fractions of triplets ranked d > r > h, d > r and r > h (strict; ties fail).
struct EvalResult {
    double acc_full = 0.0;
    double acc_dr = 0.0;
    double acc_rh = 0.0;
    std::size_t n = 0;

    nlohmann::ordered_json to_json() const;
};

EvalResult evaluate(const RankerParams& params, std::span<const TripletView> triplets);
EvalResult evaluate(const RankerParams& params, const TripletSet& test,
                    const EmbeddingStore& store);

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;  // full-pass mean loss after the epoch
    EvalResult val;
};

struct TrainHistory {
    double initial_train_loss = 0.0;
    std::vector<EpochRecord> epochs;
    int epochs_run = 0;
    int best_epoch = 0;  // 0 = initial parameters
    bool stopped_early = false;

    nlohmann::ordered_json to_json() const;
};

struct TrainResult {
    RankerParams params;
    TrainHistory history;
};

/// Mini-batch Adam on the combined loss with a per-epoch seeded shuffle.
/// After every epoch acc_full on `val` is measured; training stops once it
/// has not improved for `patience` epochs and the best parameters are
/// returned. With an empty `val` the final parameters are returned.
/// `quality == nullptr` disables the pair mask.
TrainResult train(const TripletSet& train_set, const TripletSet& val_set,
                  const EmbeddingStore& store, const QualityTable* quality,
                  const RankerConfig& cfg);

/// Masks for every triplet (all-active when `quality` is null).
std::vector<PairMask> build_masks(const TripletSet& ts, const QualityTable* quality,
                                  double sigma);

/// Reward for one instruction-response pair given their store keys.
double score(const RankerParams& params, const EmbeddingStore& store,
             std::string_view instruction_key, std::string_view response_key);

/// Score of a dataset example ("<id>:instruction", "<id>:response").
double score_example(const RankerParams& params, const EmbeddingStore& store,
                     std::string_view example_id);

/// SCARPAR1 layout, little-endian:
///   "SCARPAR1" | u32 version (1) | u32 M | u32 H | f64 weights in tensor order
inline constexpr std::string_view kParamsMagic = "SCARPAR1";
inline constexpr std::uint32_t kParamsVersion = 1;

std::vector<std::uint8_t> encode_params(const RankerParams& params);
RankerParams decode_params(std::span<const std::uint8_t> bytes);
void save_params(const RankerParams& params, const std::filesystem::path& path);
RankerParams load_params(const std::filesystem::path& path);

}  // namespace scar
