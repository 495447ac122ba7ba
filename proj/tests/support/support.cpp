#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include <unistd.h>

#include "scar/error.hpp"

namespace scar::testing {

namespace fs = std::filesystem;

fs::path source_dir() { return fs::path(SCAR_SOURCE_DIR); }

fs::path data_dir() { return source_dir() / "tests" / "data"; }

fs::path temp_dir(const std::string& tag) {
    static std::uint64_t counter = 0;
    const auto dir = fs::temp_directory_path() /
                     ("scar-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
                      std::to_string(counter++));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::vector<FixtureText> style_fixture() {
    std::ifstream in(data_dir() / "style_fixture.jsonl");
    std::vector<FixtureText> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        out.push_back({j.at("id").get<std::string>(), j.at("text").get<std::string>()});
    }
    return out;
}

nlohmann::json style_expected() {
    std::ifstream in(data_dir() / "style_fixture_expected.json");
    return nlohmann::json::parse(in);
}

double rational(const std::string& pq) {
    const auto slash = pq.find('/');
    const double p = std::stod(pq.substr(0, slash));
    const double q = slash == std::string::npos ? 1.0 : std::stod(pq.substr(slash + 1));
    return p / q;
}

// ---- ranker oracle ---------------------------------------------------------

namespace {

using T = RankerParams;

double at(const RankerParams& p, T::Tensor t, std::size_t r, std::size_t c) {
    const auto [rows, cols] = p.shape(t);
    (void)rows;
    return p[t][r * cols + c];
}

double euclid(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

}  // namespace

OracleForward oracle_forward(const RankerParams& p, const EmbeddingRecord& x,
                             const EmbeddingRecord& y) {
    const std::size_t m = p.dim();
    const std::size_t h = p.hidden();
    OracleForward out;
    double margin = std::numeric_limits<double>::infinity();

    std::vector<double> joint;
    joint.insert(joint.end(), x.cls.begin(), x.cls.end());
    joint.insert(joint.end(), y.cls.begin(), y.cls.end());

    std::vector<double> h1(m);
    for (std::size_t r = 0; r < m; ++r) {
        double z = p[T::rel1_b][r];
        for (std::size_t c = 0; c < 2 * m; ++c) z += at(p, T::rel1_w, r, c) * joint[c];
        margin = std::min(margin, std::abs(z));
        h1[r] = z > 0.0 ? z : 0.0;
    }
    out.v_c.assign(m, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
        double z = p[T::rel2_b][r];
        for (std::size_t c = 0; c < m; ++c) z += at(p, T::rel2_w, r, c) * h1[c];
        margin = std::min(margin, std::abs(z));
        out.v_c[r] = z > 0.0 ? z : 0.0;
    }
    out.v_p.assign(m, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
        double z = p[T::form_b][r];
        for (std::size_t c = 0; c < m; ++c) z += at(p, T::form_w, r, c) * y.pooled[c];
        out.v_p[r] = z;
    }
    double s = p[T::head2_b][0];
    for (std::size_t r = 0; r < h; ++r) {
        double z = p[T::head1_b][r];
        for (std::size_t c = 0; c < m; ++c) z += at(p, T::head1_w, r, c) * out.v_p[c];
        for (std::size_t c = 0; c < m; ++c) z += at(p, T::head1_w, r, m + c) * out.v_c[c];
        margin = std::min(margin, std::abs(z));
        if (z > 0.0) s += p[T::head2_w][r] * z;
    }
    out.score = s;
    out.min_relu_margin = margin;
    return out;
}

OracleLoss oracle_loss(const RankerParams& p, const std::vector<TripletView>& batch,
                       const std::vector<PairMask>& masks, const RankerConfig& cfg) {
    OracleLoss out;
    double margin = std::numeric_limits<double>::infinity();
    double total = 0.0;
    auto hinge = [&](double arg) {
        margin = std::min(margin, std::abs(arg));
        if (arg > 0.0) {
            ++out.active_hinges;
            return arg;
        }
        ++out.inactive_hinges;
        return 0.0;
    };
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& t = batch[i];
        const PairMask mask = masks.empty() ? PairMask{} : masks[i];
        const auto d = oracle_forward(p, *t.instruction, *t.direct);
        const auto r = oracle_forward(p, *t.instruction, *t.referenced);
        const auto h = oracle_forward(p, *t.instruction, *t.human);
        margin = std::min({margin, d.min_relu_margin, r.min_relu_margin, h.min_relu_margin});

        double loss = 0.0;
        if (mask.direct_referenced) loss += hinge(cfg.alpha - d.score + r.score);
        if (mask.referenced_human) loss += hinge(cfg.alpha - r.score + h.score);
        if (mask.direct_human) loss += hinge(cfg.alpha - d.score + h.score);

        const double p_dr = euclid(d.v_p, r.v_p);
        const double p_rh = euclid(r.v_p, h.v_p);
        const double c_hr = euclid(h.v_c, r.v_c);
        const double c_dh = euclid(d.v_c, h.v_c);
        margin = std::min({margin, p_dr, p_rh, c_hr, c_dh});
        if (cfg.lambda_p != 0.0) loss += cfg.lambda_p * hinge(p_dr - p_rh + cfg.beta_p);
        if (cfg.lambda_c != 0.0) loss += cfg.lambda_c * hinge(c_hr - c_dh + cfg.beta_c);
        total += loss;
    }
    out.loss = total / static_cast<double>(batch.size());
    out.min_kink_margin = margin;
    return out;
}

EmbeddingRecord random_record(Rng& rng, const std::string& id, std::size_t dim) {
    EmbeddingRecord rec{id, std::vector<double>(dim), std::vector<double>(dim)};
    for (auto& v : rec.cls) v = rng.uniform(-1.0, 1.0);
    for (auto& v : rec.pooled) v = rng.uniform(-1.0, 1.0);
    return rec;
}

RandomBatch random_batch(Rng& rng, std::size_t triplets, std::size_t dim, bool random_masks) {
    RandomBatch b;
    b.records.reserve(4 * triplets);
    for (std::size_t i = 0; i < triplets; ++i) {
        const auto id = "t" + std::to_string(i);
        for (const char* role : {"instruction", "direct", "referenced", "human"}) {
            b.records.push_back(random_record(rng, id + ":" + role, dim));
        }
    }
    for (std::size_t i = 0; i < triplets; ++i) {
        b.views.push_back({&b.records[4 * i], &b.records[4 * i + 1], &b.records[4 * i + 2],
                           &b.records[4 * i + 3]});
        PairMask mask;
        if (random_masks) {
            mask.direct_referenced = rng.uniform() < 0.7;
            mask.referenced_human = rng.uniform() < 0.7;
            mask.direct_human = rng.uniform() < 0.7;
        }
        b.masks.push_back(mask);
    }
    return b;
}

GradCheck gradient_check(const RankerParams& params, const RandomBatch& batch,
                         const RankerConfig& cfg, double h, double floor) {
    const auto analytic = loss_and_grad(params, batch.views, batch.masks, cfg).grad;
    RankerParams probe = params;
    auto flat = probe.flat();
    const auto g = analytic.flat();
    GradCheck out;
    for (std::size_t i = 0; i < flat.size(); ++i) {
        const double saved = flat[i];
        flat[i] = saved + h;
        const double up = total_loss(probe, batch.views, batch.masks, cfg);
        flat[i] = saved - h;
        const double down = total_loss(probe, batch.views, batch.masks, cfg);
        flat[i] = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double denom = std::max({std::abs(g[i]), std::abs(numeric), floor});
        out.max_rel_error = std::max(out.max_rel_error, std::abs(g[i] - numeric) / denom);
        ++out.checked;
    }
    const auto ol = oracle_loss(params, batch.views, batch.masks, cfg);
    out.active_hinges = ol.active_hinges;
    out.inactive_hinges = ol.inactive_hinges;
    out.min_kink_margin = ol.min_kink_margin;
    return out;
}

GradProblem grad_problem(std::uint64_t seed, std::size_t dim, std::size_t hidden,
                         double kink_clearance) {
    Rng rng(mix64(seed));
    for (int attempt = 0;; ++attempt) {
        GradProblem gp{init_params(dim, hidden, rng.next_u64()), random_batch(rng, 6, dim, true),
                       RankerConfig{}, attempt};
        // Non-zero biases so every tensor carries gradient; a larger output
        // layer spreads the scores so some ranking hinges close.
        for (auto t : {T::form_b, T::rel1_b, T::rel2_b, T::head1_b}) {
            for (auto& v : gp.params[t]) v = rng.uniform(-0.1, 0.1);
        }
        for (auto& v : gp.params[T::head2_w]) v *= 4.0;
        gp.cfg.dim = dim;
        gp.cfg.hidden = hidden;
        gp.cfg.alpha = 0.5;
        gp.cfg.beta_p = rng.uniform(0.0, 0.5);
        gp.cfg.beta_c = rng.uniform(0.0, 0.5);
        gp.cfg.lambda_p = 0.1;
        gp.cfg.lambda_c = 0.1;
        const auto ol = oracle_loss(gp.params, gp.batch.views, gp.batch.masks, gp.cfg);
        if (ol.min_kink_margin >= kink_clearance && ol.active_hinges > 0 &&
            ol.inactive_hinges > 0) {
            return gp;
        }
    }
}

// ---- CMI oracle --------------------------------------------------------------

namespace {

int cell(int x, int p, int c) { return x * 4 + p * 2 + c; }

}  // namespace

std::vector<CmiSample> cmi_samples(const Joint& joint, const std::array<int, 8>& counts) {
    auto sum = [&](int x, int p, int c) {
        // -1 marginalises that variable out.
        double s = 0.0;
        for (int xi = 0; xi < 2; ++xi) {
            for (int pi = 0; pi < 2; ++pi) {
                for (int ci = 0; ci < 2; ++ci) {
                    if ((x < 0 || x == xi) && (p < 0 || p == pi) && (c < 0 || c == ci)) {
                        s += joint[cell(xi, pi, ci)];
                    }
                }
            }
        }
        return s;
    };
    std::vector<CmiSample> out;
    for (int x = 0; x < 2; ++x) {
        for (int p = 0; p < 2; ++p) {
            for (int c = 0; c < 2; ++c) {
                CmiSample s;
                s.logp_c_given_x_p = std::log(sum(x, p, c) / sum(x, p, -1));
                s.logp_c_given_p = std::log(sum(-1, p, c) / sum(-1, p, -1));
                s.logp_p_given_x_c = std::log(sum(x, p, c) / sum(x, -1, c));
                s.logp_p_given_c = std::log(sum(-1, p, c) / sum(-1, -1, c));
                for (int k = 0; k < counts[cell(x, p, c)]; ++k) out.push_back(s);
            }
        }
    }
    return out;
}

std::pair<double, double> cmi_brute_force(const Joint& j) {
    // H(A|B) = -sum over cells of p(cell) * log(p(a, b) / p(b)).
    auto entropy_given = [&](auto key_ab, auto key_b) {
        std::map<int, double> ab;
        std::map<int, double> b;
        for (int i = 0; i < 8; ++i) {
            ab[key_ab(i >> 2, (i >> 1) & 1, i & 1)] += j[i];
            b[key_b(i >> 2, (i >> 1) & 1, i & 1)] += j[i];
        }
        double h = 0.0;
        for (int i = 0; i < 8; ++i) {
            if (j[i] <= 0.0) continue;
            const int x = i >> 2, p = (i >> 1) & 1, c = i & 1;
            h -= j[i] * std::log(ab[key_ab(x, p, c)] / b[key_b(x, p, c)]);
        }
        return h;
    };
    const auto c_given_p = entropy_given([](int, int p, int c) { return p * 2 + c; },
                                         [](int, int p, int) { return p; });
    const auto c_given_xp = entropy_given([](int x, int p, int c) { return cell(x, p, c); },
                                          [](int x, int p, int) { return x * 2 + p; });
    const auto p_given_c = entropy_given([](int, int p, int c) { return p * 2 + c; },
                                         [](int, int, int c) { return c; });
    const auto p_given_xc = entropy_given([](int x, int p, int c) { return cell(x, p, c); },
                                          [](int x, int, int c) { return x * 2 + c; });
    return {c_given_p - c_given_xp, p_given_c - p_given_xc};
}

// ---- selection properties ------------------------------------------------------

std::vector<std::string> selection_property_violations(std::size_t maps, std::uint64_t seed) {
    std::vector<std::string> bad;
    Rng rng(mix64(seed));
    const auto dir = temp_dir("selection");
    for (std::size_t m = 0; m < maps; ++m) {
        const auto tag = "map " + std::to_string(m) + ": ";
        const auto n = 1 + rng.below(60);
        std::vector<std::pair<std::string, double>> entries;
        for (std::uint64_t i = 0; i < n; ++i) {
            entries.emplace_back("ex" + std::to_string(i * 7919 % 1000),
                                 static_cast<double>(rng.below(7)) * 0.5 - 1.0);
        }
        const ScoreMap scores(entries.begin(), entries.end());

        // Independent expected order.
        std::vector<std::pair<std::string, double>> expected(scores.begin(), scores.end());
        std::sort(expected.begin(), expected.end(), [](const auto& a, const auto& b) {
            return a.second != b.second ? a.second > b.second : a.first < b.first;
        });

        const auto full = select_top_k(scores, 100.0);
        if (full.count != scores.size()) bad.push_back(tag + "k=100 does not select everything");
        for (std::size_t i = 0; i < full.items.size(); ++i) {
            const auto& item = full.items[i];
            if (item.id != expected[i].first || item.score != expected[i].second ||
                item.rank != i + 1 || !item.selected) {
                bad.push_back(tag + "k=100 order differs at rank " + std::to_string(i + 1));
                break;
            }
        }

        std::vector<std::string> previous;
        for (double k : {1.0, 5.0, 10.0, 25.0, 33.4, 50.0, 75.0, 99.0, 100.0}) {
            const auto sel = select_top_k(scores, k);
            const auto ids = sel.selected_ids();
            if (ids.size() != selection_count(scores.size(), k)) {
                bad.push_back(tag + "wrong count at k=" + std::to_string(k));
            }
            if (ids.size() < previous.size() ||
                !std::equal(previous.begin(), previous.end(), ids.begin())) {
                bad.push_back(tag + "selection at k=" + std::to_string(k) +
                              " does not extend the smaller one");
            }
            for (std::size_t i = 0; i < ids.size(); ++i) {
                if (ids[i] != expected[i].first) {
                    bad.push_back(tag + "tie-break differs at k=" + std::to_string(k));
                    break;
                }
            }
            previous = ids;
        }

        auto shuffled = entries;
        rng.shuffle(std::span<std::pair<std::string, double>>(shuffled));
        ScoreMap rebuilt;
        for (const auto& [id, s] : shuffled) rebuilt.emplace(id, s);
        const double k = rng.uniform(1.0, 100.0);
        const auto a = select_top_k(scores, k, "scar", "abc");
        const auto b = select_top_k(rebuilt, k, "scar", "abc");
        const auto a_bytes = a.to_jsonl();
        if (a_bytes != b.to_jsonl()) bad.push_back(tag + "rebuilt map changes the manifest");
        if (a_bytes != a.to_jsonl()) bad.push_back(tag + "to_jsonl is not stable");
        const SelectionManifest copy = a;
        if (copy.to_jsonl() != a_bytes) bad.push_back(tag + "a copy serializes differently");
        const auto path = dir / "manifest.jsonl";
        a.write(path);
        std::ifstream in(path, std::ios::binary);
        const std::string on_disk((std::istreambuf_iterator<char>(in)), {});
        if (on_disk != a_bytes) bad.push_back(tag + "written file differs from to_jsonl");
    }
    fs::remove_all(dir);
    return bad;
}

// ---- style families -----------------------------------------------------------

namespace {

const std::vector<std::string> kVerbs = {"install", "update", "configure", "remove", "build",
                                         "test", "deploy", "inspect"};
const std::vector<std::string> kNouns = {"package", "server", "database", "module", "library",
                                         "cache", "service", "config", "network", "cluster"};

const std::string& pick(Rng& rng, const std::vector<std::string>& v) {
    return v[static_cast<std::size_t>(rng.below(v.size()))];
}

std::string pseudo_word(Rng& rng) {
    static const std::string consonants = "bcdfghjklmnprstvwz";
    static const std::string vowels = "aeiou";
    std::string w;
    const auto syllables = 1 + rng.below(3);
    for (std::uint64_t s = 0; s < syllables; ++s) {
        w += consonants[rng.below(consonants.size())];
        w += vowels[rng.below(vowels.size())];
    }
    return w;
}

const std::vector<std::string> kFunctionPool = {"the", "a", "of", "and", "to", "in", "it",
                                                "is", "that", "for", "with", "on", "as",
                                                "but", "or", "by", "this", "from", "we",
                                                "they", "not", "be", "at", "so", "if"};

}  // namespace

std::string family_a_text(Rng& rng) {
    const auto& verb = pick(rng, kVerbs);
    const auto& noun = pick(rng, kNouns);
    std::string s = "To " + verb + " the " + noun + ", follow these steps:\n";
    s += "- **Step 1**: Open the " + pick(rng, kNouns) + " settings.\n";
    s += "- **Step 2**: Select the " + pick(rng, kNouns) + " and confirm.\n";
    s += "- **Step 3**: Run the " + verb + " command and check the output.\n\n";
    s += "The " + noun + " is now ready to use.";
    return s;
}

std::string family_b_text(Rng& rng) {
    const auto words = 6 + rng.below(70);
    const double function_share = rng.uniform(0.05, 0.6);
    std::string s;
    std::size_t in_sentence = 0;
    for (std::uint64_t i = 0; i < words; ++i) {
        std::string w = rng.uniform() < function_share ? pick(rng, kFunctionPool) : pseudo_word(rng);
        if (in_sentence == 0) w[0] = static_cast<char>(w[0] - 'a' + 'A');
        if (!s.empty()) s += ' ';
        s += w;
        ++in_sentence;
        if (in_sentence > 2 && rng.uniform() < 0.15) {
            s += rng.uniform() < 0.8 ? "." : "!";
            in_sentence = 0;
        } else if (rng.uniform() < 0.08) {
            s += ',';
        }
    }
    if (in_sentence > 0) s += '.';
    return s;
}

std::string instruction_text(Rng& rng) {
    return "How do I " + pick(rng, kVerbs) + " the " + pick(rng, kNouns) + "?";
}

}  // namespace scar::testing
