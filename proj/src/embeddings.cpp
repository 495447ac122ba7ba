#include "scar/embeddings.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <unordered_set>

#include "scar/error.hpp"
#include "scar/jsonl.hpp"
#include "scar/rng.hpp"
#include "scar/stylometry.hpp"

namespace scar {

namespace {

static_assert(std::numeric_limits<float>::is_iec559, "SCAREMB1 requires IEEE-754 binary32");

class ByteWriter {
public:
    void u16(std::uint16_t v) { le(v, 2); }
    void u32(std::uint32_t v) { le(v, 4); }
    void u64(std::uint64_t v) { le(v, 8); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void bytes(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }
    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    void le(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    std::vector<std::uint8_t> out_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::size_t remaining() const { return data_.size() - pos_; }
    std::size_t position() const { return pos_; }

    std::uint64_t le(std::size_t n, const char* what) {
        need(n, what);
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
        pos_ += n;
        return v;
    }
    float f32(const char* what) { return std::bit_cast<float>(static_cast<std::uint32_t>(le(4, what))); }
    std::string_view bytes(std::size_t n, const char* what) {
        need(n, what);
        std::string_view s(reinterpret_cast<const char*>(data_.data() + pos_), n);
        pos_ += n;
        return s;
    }

private:
    void need(std::size_t n, const char* what) {
        if (remaining() < n) {
            fail(ErrorKind::corruption, std::string("embedding store truncated while reading ") +
                                            what + " at offset " + std::to_string(pos_));
        }
    }
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

bool valid_utf8(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        const auto c = static_cast<unsigned char>(s[i]);
        std::size_t len = 0;
        char32_t cp = 0;
        if (c < 0x80) {
            ++i;
            continue;
        }
        if ((c & 0xE0) == 0xC0) {
            len = 2;
            cp = c & 0x1F;
        } else if ((c & 0xF0) == 0xE0) {
            len = 3;
            cp = c & 0x0F;
        } else if ((c & 0xF8) == 0xF0) {
            len = 4;
            cp = c & 0x07;
        } else {
            return false;
        }
        if (i + len > s.size()) return false;
        for (std::size_t k = 1; k < len; ++k) {
            const auto b = static_cast<unsigned char>(s[i + k]);
            if ((b & 0xC0) != 0x80) return false;
            cp = (cp << 6) | (b & 0x3F);
        }
        const char32_t min_for_len[] = {0, 0, 0x80, 0x800, 0x10000};
        if (cp < min_for_len[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
        i += len;
    }
    return true;
}

std::vector<double> round_to_f32(std::vector<double> v) {
    for (auto& x : v) x = static_cast<double>(static_cast<float>(x));
    return v;
}

double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

std::vector<double> normalized(std::vector<double> v) {
    const double n = norm2(v);
    if (n > 0.0) {
        for (auto& x : v) x /= n;
    }
    return v;
}

std::vector<double> gaussian(Rng& rng, std::size_t dim, double scale = 1.0) {
    std::vector<double> v(dim);
    for (auto& x : v) x = scale * rng.normal();
    return v;
}

// Index and sign of one hashed token.
std::pair<std::size_t, double> hashed_slot(std::string_view token, std::size_t dim,
                                           std::uint64_t seed) {
    const std::uint64_t h = mix64(fnv1a(token) ^ mix64(seed));
    return {static_cast<std::size_t>(h % dim), (h >> 63) != 0 ? -1.0 : 1.0};
}

}  // namespace

EmbeddingStore::EmbeddingStore(std::size_t dim, std::vector<EmbeddingRecord> records)
    : dim_(dim), records_(std::move(records)) {
    if (dim_ == 0) fail(ErrorKind::shape, "embedding dimension must be >= 1");
    index_.reserve(records_.size());
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto& r = records_[i];
        if (r.cls.size() != dim_ || r.pooled.size() != dim_) {
            fail(ErrorKind::shape, "embedding record \"" + r.id + "\" has dimension " +
                                       std::to_string(r.cls.size()) + "/" +
                                       std::to_string(r.pooled.size()) + ", expected " +
                                       std::to_string(dim_));
        }
        if (!index_.emplace(r.id, i).second) {
            fail(ErrorKind::duplicate_id, "duplicate embedding id \"" + r.id + "\"");
        }
    }
}

bool EmbeddingStore::contains(std::string_view id) const { return find(id) != nullptr; }

const EmbeddingRecord* EmbeddingStore::find(std::string_view id) const {
    const auto it = index_.find(std::string(id));
    return it == index_.end() ? nullptr : &records_[it->second];
}

const EmbeddingRecord& EmbeddingStore::at(std::string_view id) const {
    const auto* r = find(id);
    if (r == nullptr) fail(ErrorKind::lookup, "no embedding for \"" + std::string(id) + "\"");
    return *r;
}

std::vector<std::uint8_t> encode_store(std::span<const EmbeddingRecord> records) {
    const std::size_t dim = records.empty() ? 1 : records.front().cls.size();
    if (dim == 0 || dim > std::numeric_limits<std::uint32_t>::max()) {
        fail(ErrorKind::shape, "embedding dimension out of range");
    }
    std::unordered_set<std::string_view> seen;
    ByteWriter w;
    w.bytes(kStoreMagic);
    w.u32(kStoreVersion);
    w.u32(static_cast<std::uint32_t>(dim));
    w.u64(records.size());
    for (const auto& r : records) {
        if (r.cls.size() != dim || r.pooled.size() != dim) {
            fail(ErrorKind::shape, "embedding record \"" + r.id + "\" does not match dimension " +
                                       std::to_string(dim));
        }
        if (r.id.size() > std::numeric_limits<std::uint16_t>::max()) {
            fail(ErrorKind::argument, "embedding id longer than 65535 bytes");
        }
        if (!valid_utf8(r.id)) fail(ErrorKind::argument, "embedding id is not valid UTF-8");
        if (!seen.insert(r.id).second) {
            fail(ErrorKind::duplicate_id, "duplicate embedding id \"" + r.id + "\"");
        }
        w.u16(static_cast<std::uint16_t>(r.id.size()));
        w.bytes(r.id);
        for (const auto* vec : {&r.cls, &r.pooled}) {
            for (double x : *vec) {
                const auto f = static_cast<float>(x);
                if (!std::isfinite(f)) {
                    fail(ErrorKind::argument, "embedding \"" + r.id + "\" has a non-finite value");
                }
                w.f32(f);
            }
        }
    }
    return w.take();
}

EmbeddingStore decode_store(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    if (bytes.size() < kStoreHeaderSize) {
        if (bytes.size() >= kStoreMagic.size() &&
            std::memcmp(bytes.data(), kStoreMagic.data(), kStoreMagic.size()) != 0) {
            fail(ErrorKind::format, "not a SCAREMB1 file (bad magic)");
        }
        fail(ErrorKind::corruption, "embedding store header truncated");
    }
    if (r.bytes(kStoreMagic.size(), "magic") != kStoreMagic) {
        fail(ErrorKind::format, "not a SCAREMB1 file (bad magic)");
    }
    const auto version = r.le(4, "version");
    if (version != kStoreVersion) {
        fail(ErrorKind::format, "unsupported SCAREMB1 version " + std::to_string(version));
    }
    const auto dim = static_cast<std::size_t>(r.le(4, "dim"));
    if (dim == 0) fail(ErrorKind::format, "SCAREMB1 dimension is zero");
    const std::uint64_t count = r.le(8, "count");
    const std::uint64_t min_record = 2 + 8 * static_cast<std::uint64_t>(dim);
    if (count > r.remaining() / min_record) {
        fail(ErrorKind::corruption, "declared record count " + std::to_string(count) +
                                        " exceeds file size");
    }

    std::vector<EmbeddingRecord> records;
    records.reserve(static_cast<std::size_t>(count));
    std::unordered_set<std::string> seen;
    for (std::uint64_t k = 0; k < count; ++k) {
        EmbeddingRecord rec;
        const auto id_len = static_cast<std::size_t>(r.le(2, "id length"));
        rec.id = std::string(r.bytes(id_len, "id"));
        if (!valid_utf8(rec.id)) {
            fail(ErrorKind::corruption, "record " + std::to_string(k) + " id is not valid UTF-8");
        }
        if (!seen.insert(rec.id).second) {
            fail(ErrorKind::duplicate_id, "duplicate embedding id \"" + rec.id + "\"");
        }
        for (auto* vec : {&rec.cls, &rec.pooled}) {
            vec->resize(dim);
            for (auto& x : *vec) {
                const float f = r.f32("vector");
                if (!std::isfinite(f)) {
                    fail(ErrorKind::corruption, "record \"" + rec.id + "\" has a non-finite value");
                }
                x = static_cast<double>(f);
            }
        }
        records.push_back(std::move(rec));
    }
    if (r.remaining() != 0) {
        fail(ErrorKind::corruption, std::to_string(r.remaining()) +
                                        " trailing bytes after the declared records");
    }
    return EmbeddingStore(dim, std::move(records));
}

void write_store(std::span<const EmbeddingRecord> records, const std::filesystem::path& path) {
    const auto bytes = encode_store(records);
    jsonl::write_file(path, std::string_view(reinterpret_cast<const char*>(bytes.data()),
                                             bytes.size()));
}

EmbeddingStore open_store(const std::filesystem::path& path) {
    const auto contents = jsonl::read_file(path);
    return decode_store(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(contents.data()), contents.size()));
}

EmbeddingRecord toy_embed(std::string_view id, std::string_view text, std::size_t dim,
                          std::uint64_t seed) {
    if (dim == 0) fail(ErrorKind::argument, "toy_embed: dim must be >= 1");
    if (text.empty()) fail(ErrorKind::argument, "toy_embed: empty text");

    std::vector<std::string> tokens;
    for (const auto& tok : style::tokenize(text).word_tokens) {
        tokens.push_back(style::to_lower_ascii(tok));
    }
    if (tokens.empty()) tokens.emplace_back(text);  // punctuation-only text hashes as a whole

    std::vector<double> cls(dim, 0.0);
    std::vector<double> pooled(dim, -std::numeric_limits<double>::infinity());
    for (const auto& tok : tokens) {
        const auto [index, sign] = hashed_slot(tok, dim, seed);
        cls[index] += sign;
        for (std::size_t j = 0; j < dim; ++j) {
            pooled[j] = std::max(pooled[j], j == index ? sign : 0.0);
        }
    }
    if (norm2(cls) == 0.0) {
        // Signed hits cancelled exactly; fall back to a text-level slot.
        cls[hashed_slot(text, dim, seed).first] = 1.0;
    }
    return {std::string(id), round_to_f32(normalized(std::move(cls))), round_to_f32(std::move(pooled))};
}

std::vector<EmbeddingRecord> toy_embed_dataset(const Dataset& ds, std::size_t dim,
                                               std::uint64_t seed) {
    std::vector<EmbeddingRecord> out;
    out.reserve(2 * ds.size());
    for (const auto& ex : ds.records) {
        out.push_back(toy_embed(text_key(ex.id, Role::instruction), ex.instruction, dim, seed));
        out.push_back(toy_embed(text_key(ex.id, Role::response), ex.response, dim, seed));
    }
    return out;
}

std::vector<EmbeddingRecord> toy_embed_triplets(const TripletSet& ts, std::size_t dim,
                                                std::uint64_t seed) {
    std::vector<EmbeddingRecord> out;
    out.reserve(4 * ts.size());
    for (const auto& t : ts.records) {
        out.push_back(toy_embed(text_key(t.id, Role::instruction), t.instruction, dim, seed));
        out.push_back(toy_embed(text_key(t.id, Role::human), t.human, dim, seed));
        out.push_back(toy_embed(text_key(t.id, Role::referenced), t.referenced, dim, seed));
        out.push_back(toy_embed(text_key(t.id, Role::direct), t.direct, dim, seed));
    }
    return out;
}

void SyntheticStyleConfig::validate() const {
    if (dim == 0) fail(ErrorKind::config, "synthetic: dim must be >= 1");
    for (double s : {eps_direct, eps_human, eps_referenced, form_noise, human_form_scale}) {
        if (!(s > 0.0) || !std::isfinite(s)) {
            fail(ErrorKind::config, "synthetic: noise scales must be positive and finite");
        }
    }
    if (!(eps_direct < eps_human)) {
        fail(ErrorKind::config, "synthetic: eps_direct must be smaller than eps_human");
    }
}

SyntheticSet make_synthetic_tripletset(const SyntheticStyleConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    const std::size_t m = cfg.dim;
    const double unit = 1.0 / std::sqrt(static_cast<double>(m));
    const auto form_center = gaussian(rng, m);

    auto aligned = [&](const std::vector<double>& u, double eps) {
        auto g = gaussian(rng, m, unit);
        for (std::size_t j = 0; j < m; ++j) g[j] = u[j] + eps * g[j];
        return round_to_f32(normalized(std::move(g)));
    };
    auto near_center = [&]() {
        auto v = gaussian(rng, m, cfg.form_noise);
        for (std::size_t j = 0; j < m; ++j) v[j] += form_center[j];
        return round_to_f32(std::move(v));
    };

    SyntheticSet out;
    std::vector<EmbeddingRecord> records;
    records.reserve(4 * cfg.n);
    char id[32];
    for (std::size_t i = 0; i < cfg.n; ++i) {
        std::snprintf(id, sizeof id, "syn-%06zu", i);
        const auto u = round_to_f32(normalized(gaussian(rng, m)));
        auto direct_cls = aligned(u, cfg.eps_direct);
        auto human_cls = aligned(u, cfg.eps_human);
        auto referenced_cls = aligned(human_cls, cfg.eps_referenced);
        auto direct_pooled = near_center();
        auto referenced_pooled = near_center();
        auto human_pooled = round_to_f32(gaussian(rng, m, cfg.human_form_scale));

        records.push_back({text_key(id, Role::instruction), u, u});
        records.push_back({text_key(id, Role::direct), std::move(direct_cls), std::move(direct_pooled)});
        records.push_back(
            {text_key(id, Role::referenced), std::move(referenced_cls), std::move(referenced_pooled)});
        records.push_back({text_key(id, Role::human), std::move(human_cls), std::move(human_pooled)});

        Triplet t;
        t.id = id;
        t.instruction = std::string("synthetic instruction ") + id;
        t.human = std::string("synthetic human response ") + id;
        t.referenced = std::string("synthetic referenced response ") + id;
        t.direct = std::string("synthetic direct response ") + id;
        out.triplets.records.push_back(std::move(t));
        out.instruction_ids.push_back(text_key(id, Role::instruction));
    }
    out.triplets.provenance = {"synthetic", ""};
    out.store = EmbeddingStore(m, std::move(records));
    return out;
}

double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) fail(ErrorKind::shape, "cosine: dimension mismatch");
    double dot = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) dot += a[j] * b[j];
    const double n = norm2(a) * norm2(b);
    return n > 0.0 ? dot / n : 0.0;
}

}  // namespace scar
