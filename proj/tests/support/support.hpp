#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "scar/corpus.hpp"
#include "scar/error.hpp"
#include "scar/embeddings.hpp"
#include "scar/ranker.hpp"
#include "scar/rng.hpp"
#include "scar/selection.hpp"
#include "scar/surprisal.hpp"

namespace scar::testing {

/// Kind of the scar::Error raised by fn, or nullopt when it returns normally.
template <typename F>
std::optional<ErrorKind> error_kind(F&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    return std::nullopt;
}

std::filesystem::path data_dir();
std::filesystem::path source_dir();

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& tag);

struct FixtureText {
    std::string id;
    std::string text;
};

std::vector<FixtureText> style_fixture();

/// Frozen oracle output, one object per fixture text.
nlohmann::json style_expected();

/// "p/q" -> p / q as a double.
double rational(const std::string& pq);

// ---- ranker oracle ---------------------------------------------------------

/// Straight-line forward pass from explicit per-element loops, plus the
/// smallest |pre-activation| seen at any relu.
struct OracleForward {
    double score = 0.0;
    std::vector<double> v_p;
    std::vector<double> v_c;
    double min_relu_margin = 0.0;
};

OracleForward oracle_forward(const RankerParams& p, const EmbeddingRecord& x,
                             const EmbeddingRecord& y);

/// Batch-mean loss computed from oracle_forward, and the smallest distance of
/// any hinge argument, relu pre-activation or triplet distance to its kink.
struct OracleLoss {
    double loss = 0.0;
    double min_kink_margin = 0.0;
    int active_hinges = 0;
    int inactive_hinges = 0;
};

OracleLoss oracle_loss(const RankerParams& p, const std::vector<TripletView>& batch,
                       const std::vector<PairMask>& masks, const RankerConfig& cfg);

/// Random embedding records; cls and pooled entries uniform in [-1, 1].
EmbeddingRecord random_record(Rng& rng, const std::string& id, std::size_t dim);

/// Owns the records behind a batch of TripletViews.
struct RandomBatch {
    std::vector<EmbeddingRecord> records;
    std::vector<TripletView> views;
    std::vector<PairMask> masks;
};

RandomBatch random_batch(Rng& rng, std::size_t triplets, std::size_t dim, bool random_masks);

struct GradCheck {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    int active_hinges = 0;
    int inactive_hinges = 0;
    double min_kink_margin = 0.0;
};

/// Central differences (step h) of total_loss against loss_and_grad over
/// every parameter. Relative error |a - n| / max(|a|, |n|, floor).
GradCheck gradient_check(const RankerParams& params, const RandomBatch& batch,
                         const RankerConfig& cfg, double h, double floor);

/// A gradient-check problem for one seed: scaled Xavier params, a random
/// batch with mixed masks and a config whose margins leave hinges on both
/// sides. Resamples until every kink is at least `kink_clearance` away.
struct GradProblem {
    RankerParams params;
    RandomBatch batch;
    RankerConfig cfg;
    int resamples = 0;
};

GradProblem grad_problem(std::uint64_t seed, std::size_t dim, std::size_t hidden,
                         double kink_clearance);

// ---- CMI oracle --------------------------------------------------------------

/// Joint distribution over (x, p, c) in {0,1}^3, index x*4 + p*2 + c.
using Joint = std::array<double, 8>;

/// Samples with counts proportional to the joint (counts[i] copies of cell i),
/// log-probabilities read off the joint by marginalisation.
std::vector<CmiSample> cmi_samples(const Joint& joint, const std::array<int, 8>& counts);

/// H(C|P) - H(C|X,P) and H(P|C) - H(P|X,C) from entropy sums.
std::pair<double, double> cmi_brute_force(const Joint& joint);

// ---- selection properties ------------------------------------------------------

/// Runs the selection invariants over `maps` random score maps (sizes 1-60,
/// scores drawn from a small set so ties are common):
///   nesting     the selection at a smaller k is a prefix of a larger one
///   identity    k = 100 selects everything, by score desc then id asc
///   tie-break   building the map from shuffled insertions changes nothing,
///               and the order equals an independent sort
///   bytes       to_jsonl is stable across calls, copies and file writes
/// Returns one message per violation.
std::vector<std::string> selection_property_violations(std::size_t maps, std::uint64_t seed);

// ---- style families -----------------------------------------------------------

/// Family A: one bullet template with slot fills. Family B: free prose of
/// random length and vocabulary.
std::string family_a_text(Rng& rng);
std::string family_b_text(Rng& rng);
std::string instruction_text(Rng& rng);

}  // namespace scar::testing
