#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "scar/corpus.hpp"

namespace scar {

/// Encoder view of one text: the [CLS]-position vector and the per-dimension
/// max over token vectors. Values are widened from the f32 storage.
struct EmbeddingRecord {
    std::string id;
    std::vector<double> cls;
    std::vector<double> pooled;

    bool operator==(const EmbeddingRecord&) const = default;
};

/// Immutable, id-indexed set of records sharing one dimension.
class EmbeddingStore {
public:
    EmbeddingStore() = default;
    EmbeddingStore(std::size_t dim, std::vector<EmbeddingRecord> records);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return records_.size(); }
    const std::vector<EmbeddingRecord>& records() const { return records_; }

    bool contains(std::string_view id) const;
    /// Raises a lookup error when absent.
    const EmbeddingRecord& at(std::string_view id) const;
    const EmbeddingRecord* find(std::string_view id) const;

private:
    std::size_t dim_ = 0;
    std::vector<EmbeddingRecord> records_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// SCAREMB1 layout, all integers and floats little-endian:
///   "SCAREMB1" | u32 version (1) | u32 dim | u64 count
///   count x ( u16 id_len | id bytes (UTF-8) | dim x f32 cls | dim x f32 pooled )
inline constexpr std::string_view kStoreMagic = "SCAREMB1";
inline constexpr std::uint32_t kStoreVersion = 1;
inline constexpr std::size_t kStoreHeaderSize = 24;

std::vector<std::uint8_t> encode_store(std::span<const EmbeddingRecord> records);
EmbeddingStore decode_store(std::span<const std::uint8_t> bytes);

void write_store(std::span<const EmbeddingRecord> records, const std::filesystem::path& path);
EmbeddingStore open_store(const std::filesystem::path& path);

/// Deterministic feature-hashed embedding. Each lowercased word token hashes
/// (with the seed) to an index and a sign. cls is the L2-normalized sum of
/// the signed one-hots; pooled is their per-dimension max.
EmbeddingRecord toy_embed(std::string_view id, std::string_view text, std::size_t dim,
                          std::uint64_t seed);

/// Toy records for every instruction and response of a corpus, keyed by text_key().
std::vector<EmbeddingRecord> toy_embed_dataset(const Dataset& ds, std::size_t dim,
                                               std::uint64_t seed);
std::vector<EmbeddingRecord> toy_embed_triplets(const TripletSet& ts, std::size_t dim,
                                                std::uint64_t seed);

/// Generator for embedding-level triplets with known style structure.
///
/// Per triplet an instruction direction u is drawn. With near(v, eps) =
/// normalize(v + eps * g), g a Gaussian vector of expected unit norm:
///   direct cls     = near(u, eps_direct)        answers the instruction closely
///   human cls      = near(u, eps_human)         loosely related content
///   referenced cls = near(human, eps_referenced) a rewrite keeps the human content
/// Direct and referenced pooled vectors scatter (form_noise) around one form
/// center shared by the whole set; human pooled vectors are fresh Gaussian
/// draws with per-coordinate scale human_form_scale.
struct SyntheticStyleConfig {
    std::size_t dim = 32;
    std::size_t n = 1000;
    std::uint64_t seed = 7;
    double eps_direct = 0.05;
    double eps_human = 3.0;
    double eps_referenced = 0.2;
    double form_noise = 0.1;
    double human_form_scale = 1.0;

    void validate() const;
};

struct SyntheticSet {
    TripletSet triplets;
    EmbeddingStore store;
    std::vector<std::string> instruction_ids;
};

SyntheticSet make_synthetic_tripletset(const SyntheticStyleConfig& cfg);

double cosine(std::span<const double> a, std::span<const double> b);

}  // namespace scar
