#include "cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>

#include <CLI11.hpp>

#include "scar/corpus.hpp"
#include "scar/embeddings.hpp"
#include "scar/jsonl.hpp"
#include "scar/parallel.hpp"
#include "scar/quality.hpp"
#include "scar/ranker.hpp"
#include "scar/rng.hpp"
#include "scar/selection.hpp"
#include "scar/stylometry.hpp"
#include "scar/surprisal.hpp"

namespace scar::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

// Raw flag values; which ones matter depends on the subcommand.
struct Flags {
    std::string config;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::string out = ".";

    std::string dataset;
    std::string triplets;
    std::string store;
    std::string quality;
    std::string scores;
    std::string params;
    std::string samples;
    std::string baseline;
    std::string domain = "open";
    std::string judge_url;
    bool unigram = false;
    bool no_quality_mask = false;

    std::size_t dim = 32;
    std::size_t hidden = 256;
    std::size_t n = 1000;
    double lr = 1e-3;
    double sigma = 2.5;
    int epochs = 20;
    int patience = 3;
    std::size_t batch_size = 32;
    double val_fraction = 0.1;
    double k = 10.0;
    double abs_tol = 0.15;
    double cap = 2.5;
};

// Resolution order: flag given on the command line, then config file, then default.
class Resolver {
public:
    Resolver(const CLI::App& sub, nlohmann::json file) : sub_(sub), file_(std::move(file)) {}

    template <typename T>
    T get(const std::string& key, const T& flag_value) {
        T value = flag_value;
        if (!given(key)) {
            if (auto it = file_.find(key); it != file_.end()) {
                try {
                    value = it->get<T>();
                } catch (const nlohmann::json::exception& e) {
                    fail(ErrorKind::config, "config key '" + key + "': " + e.what());
                }
            }
        }
        resolved[key] = value;
        return value;
    }

    bool given(const std::string& key) const {
        const auto* opt = sub_.get_option_no_throw("--" + dashed(key));
        return opt != nullptr && opt->count() > 0;
    }

    bool in_file(const std::string& key) const { return file_.contains(key); }

    ojson resolved;

private:
    static std::string dashed(std::string key) {
        for (auto& c : key) {
            if (c == '_') c = '-';
        }
        return key;
    }

    const CLI::App& sub_;
    nlohmann::json file_;
};

nlohmann::json load_config(const std::string& path) {
    if (path.empty()) return nlohmann::json::object();
    if (!fs::exists(path)) fail(ErrorKind::config, "config file not found: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(jsonl::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::config, "config file " + path + " is not valid JSON: " + e.what());
    }
    if (!j.is_object()) fail(ErrorKind::config, "config file must hold a JSON object");
    return j;
}

// Missing inputs are usage errors, unlike unreadable ones.
std::string require_input(const std::string& path, const char* what) {
    if (path.empty()) fail(ErrorKind::argument, std::string("missing required --") + what);
    if (!fs::exists(path)) fail(ErrorKind::argument, std::string(what) + " file not found: " + path);
    return path;
}

fs::path out_file(const std::string& dir, const char* name) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorKind::io, "cannot create output directory " + dir + ": " + ec.message());
    return fs::path(dir) / name;
}

void write_json(const fs::path& path, const ojson& j) { jsonl::write_file(path, j.dump(2) + "\n"); }

// PPL lookup by key, accepting the ":cond" suffix used by exported score files.
std::optional<double> lookup_ppl(const ScoreTable& table, const std::string& key) {
    if (auto it = table.find(key); it != table.end()) return perplexity(it->second);
    if (auto it = table.find(key + ":cond"); it != table.end()) return perplexity(it->second);
    return std::nullopt;
}

int cmd_analyze(const Flags& f, Resolver& r, std::ostream& out) {
    const auto dataset = require_input(r.get("dataset", f.dataset), "dataset");
    const auto scores = r.get("scores", f.scores);
    const bool unigram = r.get("unigram", f.unigram);
    const auto out_dir = r.get("out", f.out);
    const auto ds = load_examples(dataset);
    if (ds.empty()) fail(ErrorKind::degenerate_data, "dataset " + dataset + " is empty");

    std::vector<style::StyleProfile> profiles;
    profiles.reserve(ds.size());
    for (const auto& ex : ds.records) profiles.push_back(style::style_profile(ex.response));

    std::vector<double> ppl;
    if (!scores.empty()) {
        const auto table = load_scores(require_input(scores, "scores"));
        for (const auto& ex : ds.records) {
            const auto v = lookup_ppl(table, ex.id);
            if (!v) fail(ErrorKind::lookup, "no score entry for example '" + ex.id + "'");
            ppl.push_back(*v);
        }
    } else if (unigram) {
        const auto lm = fit_unigram(ds);
        for (const auto& ex : ds.records) ppl.push_back(perplexity(lm.score(ex.instruction, ex.response)));
    }
    const auto report = ppl.empty() ? style::corpus_report(profiles)
                                    : style::corpus_report(profiles, std::span<const double>(ppl));
    auto j = report.to_json();
    j["lexicon"] = style::lexicon_version();
    j["config_hash"] = fingerprint(r.resolved);
    write_json(out_file(out_dir, "style_report.json"), j);
    jsonl::write_file(out_file(out_dir, "style_report.txt"), report.to_table());
    out << report.to_table();
    return 0;
}

int cmd_embed_toy(const Flags& f, Resolver& r, std::ostream& out) {
    const auto dataset = r.get("dataset", f.dataset);
    const auto triplets = r.get("triplets", f.triplets);
    const auto dim = r.get("dim", f.dim);
    const auto seed = r.get("seed", f.seed);
    const auto out_dir = r.get("out", f.out);
    if (dataset.empty() == triplets.empty()) {
        fail(ErrorKind::argument, "embed-toy needs exactly one of --dataset or --triplets");
    }
    if (dim == 0) fail(ErrorKind::config, "dim must be >= 1");
    std::vector<EmbeddingRecord> records;
    if (!dataset.empty()) {
        records = toy_embed_dataset(load_examples(require_input(dataset, "dataset")), dim, seed);
    } else {
        records = toy_embed_triplets(load_triplets(require_input(triplets, "triplets")), dim, seed);
    }
    const auto path = out_file(out_dir, "embeddings.scaremb");
    write_store(records, path);
    out << "wrote " << records.size() << " records (dim " << dim << ") to " << path.string() << "\n";
    return 0;
}

int cmd_synth(const Flags& f, Resolver& r, std::ostream& out) {
    SyntheticStyleConfig sc;
    sc.n = r.get("n", f.n);
    sc.dim = r.get("dim", f.dim);
    sc.seed = r.get("seed", f.seed);
    const auto out_dir = r.get("out", f.out);
    const auto syn = make_synthetic_tripletset(sc);
    write_triplets(syn.triplets, out_file(out_dir, "triplets.jsonl"));
    write_store(syn.store.records(), out_file(out_dir, "embeddings.scaremb"));
    out << "wrote " << syn.triplets.size() << " synthetic triplets to " << out_dir << "\n";
    return 0;
}

RankerConfig resolve_ranker(const Flags& f, Resolver& r, std::size_t store_dim) {
    RankerConfig cfg;
    // The store decides the width unless it is pinned explicitly.
    cfg.dim = (r.given("dim") || r.in_file("dim")) ? r.get("dim", f.dim) : store_dim;
    r.resolved["dim"] = cfg.dim;
    cfg.hidden = r.get("hidden", f.hidden);
    cfg.alpha = r.get("alpha", cfg.alpha);
    cfg.beta_p = r.get("beta_p", cfg.beta_p);
    cfg.beta_c = r.get("beta_c", cfg.beta_c);
    cfg.lambda_p = r.get("lambda_p", cfg.lambda_p);
    cfg.lambda_c = r.get("lambda_c", cfg.lambda_c);
    cfg.sigma = r.get("sigma", f.sigma);
    cfg.lr = r.get("lr", f.lr);
    cfg.max_epochs = r.get("max_epochs", f.epochs);
    cfg.patience = r.get("patience", f.patience);
    cfg.batch_size = r.get("batch_size", f.batch_size);
    cfg.seed = r.get("seed", f.seed);
    cfg.validate();
    return cfg;
}

int cmd_train(const Flags& f, Resolver& r, std::ostream& out) {
    const auto triplets_path = require_input(r.get("triplets", f.triplets), "triplets");
    const auto store_path = require_input(r.get("store", f.store), "store");
    const auto quality_path = r.get("quality", f.quality);
    const bool no_mask = r.get("no_quality_mask", f.no_quality_mask);
    const double val_fraction = r.get("val_fraction", f.val_fraction);
    const auto out_dir = r.get("out", f.out);
    if (quality_path.empty() && !no_mask) {
        fail(ErrorKind::config, "no quality table given; pass --quality or --no-quality-mask");
    }
    if (!(val_fraction >= 0.0) || val_fraction >= 1.0) {
        fail(ErrorKind::config, "val_fraction must be in [0, 1)");
    }

    const auto ts = load_triplets(triplets_path);
    const auto store = open_store(store_path);
    const auto cfg = resolve_ranker(f, r, store.dim());
    std::optional<QualityTable> quality;
    if (!no_mask) quality = load_quality(require_input(quality_path, "quality"));

    const auto parts = split(ts, {1.0 - val_fraction, val_fraction, 0.0, cfg.seed});
    const auto result = train(parts.train, parts.val, store, quality ? &*quality : nullptr, cfg);

    const auto hash = fingerprint(r.resolved);
    save_params(result.params, out_file(out_dir, "ranker.scarpar"));
    ojson history;
    history["config"] = cfg.to_json();
    history["config_hash"] = hash;
    history["n_train"] = parts.train.size();
    history["n_val"] = parts.val.size();
    history["history"] = result.history.to_json();
    write_json(out_file(out_dir, "train_history.json"), history);
    out << "trained on " << parts.train.size() << " triplets, " << result.history.epochs_run
        << " epochs (best " << result.history.best_epoch << ")\n";
    return 0;
}

int cmd_eval(const Flags& f, Resolver& r, std::ostream& out) {
    const auto params = load_params(require_input(r.get("params", f.params), "params"));
    const auto ts = load_triplets(require_input(r.get("triplets", f.triplets), "triplets"));
    const auto store = open_store(require_input(r.get("store", f.store), "store"));
    const auto out_dir = r.get("out", f.out);
    auto j = evaluate(params, ts, store).to_json();
    j["config_hash"] = fingerprint(r.resolved);
    write_json(out_file(out_dir, "eval.json"), j);
    out << j.dump(2) << "\n";
    return 0;
}

int cmd_select(const Flags& f, Resolver& r, std::ostream& out) {
    const auto ds = load_examples(require_input(r.get("dataset", f.dataset), "dataset"));
    const double k = r.get("k", f.k);
    const auto baseline = r.get("baseline", f.baseline);
    const auto threads = r.get("threads", f.threads);
    const auto out_dir = r.get("out", f.out);
    if (ds.empty()) fail(ErrorKind::degenerate_data, "dataset is empty");

    SelectionManifest manifest;
    if (baseline.empty()) {
        const auto params = load_params(require_input(r.get("params", f.params), "params"));
        const auto store = open_store(require_input(r.get("store", f.store), "store"));
        const auto scores = score_dataset(params, store, ds, threads);
        manifest = select_top_k(scores, k, "scar", fingerprint(r.resolved));
    } else {
        const auto method = parse_baseline(baseline);
        BaselineAux aux;
        aux.seed = r.get("seed", f.seed);
        ScoreTable table;
        if (method == Baseline::perplexity || method == Baseline::ifd) {
            const auto scores = r.get("scores", f.scores);
            const bool unigram = r.get("unigram", f.unigram);
            if (!scores.empty()) {
                table = load_scores(require_input(scores, "scores"));
            } else if (unigram) {
                table = unigram_score_table(fit_unigram(ds), ds);
            } else {
                fail(ErrorKind::argument, baseline + " baseline needs --scores or --unigram");
            }
            aux.scores = &table;
        }
        manifest = baseline_select(ds, method, k, aux, fingerprint(r.resolved));
    }
    manifest.write(out_file(out_dir, "manifest.jsonl"));
    out << "selected " << manifest.count << " of " << manifest.items.size() << " examples ("
        << manifest.method << ")\n";
    return 0;
}

int cmd_cmi(const Flags& f, Resolver& r, std::ostream& out) {
    const auto samples = load_cmi_samples(require_input(r.get("samples", f.samples), "samples"));
    const auto out_dir = r.get("out", f.out);
    const auto res = cmi(samples);
    ojson j;
    j["i_semantic"] = res.i_semantic;
    j["i_form"] = res.i_form;
    j["n"] = res.n;
    j["config_hash"] = fingerprint(r.resolved);
    write_json(out_file(out_dir, "cmi.json"), j);
    out << j.dump(2) << "\n";
    return 0;
}

int cmd_filter_surprisal(const Flags& f, Resolver& r, std::ostream& out) {
    const auto ts = load_triplets(require_input(r.get("triplets", f.triplets), "triplets"));
    const auto scores = r.get("scores", f.scores);
    const bool unigram = r.get("unigram", f.unigram);
    SurprisalFilter thresholds;
    thresholds.abs_tol = r.get("abs_tol", f.abs_tol);
    thresholds.cap = r.get("cap", f.cap);
    const auto out_dir = r.get("out", f.out);

    PplLookup ppl;
    if (!scores.empty()) {
        const auto table = load_scores(require_input(scores, "scores"));
        for (const auto& t : ts.records) {
            for (auto role : {Role::referenced, Role::human}) {
                const auto key = text_key(t.id, role);
                if (const auto v = lookup_ppl(table, key)) ppl[key] = *v;
            }
        }
    } else if (unigram) {
        std::vector<std::string> texts;
        for (const auto& t : ts.records) {
            texts.push_back(t.human);
            texts.push_back(t.referenced);
            texts.push_back(t.direct);
        }
        const auto lm = fit_unigram(texts);
        for (const auto& t : ts.records) {
            ppl[text_key(t.id, Role::referenced)] = perplexity(lm.score(t.instruction, t.referenced));
            ppl[text_key(t.id, Role::human)] = perplexity(lm.score(t.instruction, t.human));
        }
    } else {
        fail(ErrorKind::argument, "filter-surprisal needs --scores or --unigram");
    }
    const auto [kept, report] = filter_surprisal_deviation(ts, ppl, thresholds);
    write_triplets(kept, out_file(out_dir, "filtered_triplets.jsonl"));
    auto j = ojson(report.to_json());
    j["config_hash"] = fingerprint(r.resolved);
    write_json(out_file(out_dir, "filter_report.json"), j);
    out << "kept " << report.kept << ", removed " << report.removed << "\n";
    return 0;
}

int cmd_dedup(const Flags& f, Resolver& r, std::ostream& out) {
    const auto ds = load_examples(require_input(r.get("dataset", f.dataset), "dataset"));
    const auto out_dir = r.get("out", f.out);
    const auto [kept, report] = dedup_exact(ds);
    write_examples(kept, out_file(out_dir, "dedup.jsonl"));
    auto j = ojson(report.to_json());
    j["config_hash"] = fingerprint(r.resolved);
    write_json(out_file(out_dir, "dedup_report.json"), j);
    out << "kept " << kept.size() << ", removed " << report.removed.size() << "\n";
    return 0;
}

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v != nullptr && *v != '\0' ? std::string(v) : fallback;
}

int cmd_rate(const Flags& f, Resolver& r, std::ostream& out) {
    const auto dataset = r.get("dataset", f.dataset);
    const auto triplets = r.get("triplets", f.triplets);
    const auto domain = parse_judge_domain(r.get("domain", f.domain));
    const auto threads = r.get("threads", f.threads);
    const auto out_dir = r.get("out", f.out);
    if (dataset.empty() == triplets.empty()) {
        fail(ErrorKind::argument, "rate needs exactly one of --dataset or --triplets");
    }
    JudgeOptions options;
    options.endpoint = f.judge_url.empty() ? env_or("SCAR_JUDGE_URL", "") : f.judge_url;
    options.api_key = env_or("SCAR_JUDGE_KEY", "");
    if (options.endpoint.empty()) {
        fail(ErrorKind::config, "no judge endpoint; pass --judge-url or set SCAR_JUDGE_URL");
    }
    r.resolved["judge_url"] = options.endpoint;

    struct Job {
        std::string id;
        QualityRole role;
        std::string instruction;
        std::string response;
    };
    std::vector<Job> jobs;
    if (!dataset.empty()) {
        for (const auto& ex : load_examples(require_input(dataset, "dataset")).records) {
            jobs.push_back({ex.id, QualityRole::single, ex.instruction, ex.response});
        }
    } else {
        for (const auto& t : load_triplets(require_input(triplets, "triplets")).records) {
            jobs.push_back({t.id, QualityRole::direct, t.instruction, t.direct});
            jobs.push_back({t.id, QualityRole::referenced, t.instruction, t.referenced});
            jobs.push_back({t.id, QualityRole::human, t.instruction, t.human});
        }
    }
    std::vector<QualityRecord> records(jobs.size());
    parallel_for(jobs.size(), threads, [&](std::size_t i) {
        const auto& job = jobs[i];
        records[i] = judge_remote(options, job.id, job.role, job.instruction, job.response, domain);
    });
    std::string text;
    for (const auto& rec : records) {
        ojson j;
        j["id"] = rec.id;
        j["role"] = to_string(rec.role);
        j["helpfulness"] = rec.helpfulness;
        j["correctness"] = rec.correctness;
        text += j.dump();
        text += '\n';
    }
    jsonl::write_file(out_file(out_dir, "quality.jsonl"), text);
    out << "rated " << records.size() << " responses\n";
    return 0;
}

}  // namespace

int exit_code(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::argument:
        case ErrorKind::config:
            return 2;
        case ErrorKind::io:
        case ErrorKind::transport:
            return 4;
        default:
            return 3;
    }
}

// Hash of the resolved settings. The output location does not change results.
std::string fingerprint(const nlohmann::ordered_json& resolved) {
    auto settings = resolved;
    settings.erase("out");
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(settings.dump())));
    return buf;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Style-consistency data curation: stylometry, ranker training and top-k selection",
                 "scar"};
    app.require_subcommand(1);
    Flags f;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", f.config, "JSON config; flags override its keys");
        sub->add_option("--seed", f.seed, "random seed");
        sub->add_option("--threads", f.threads, "worker cap")->check(CLI::PositiveNumber);
        sub->add_option("--out", f.out, "output directory");
    };

    auto* analyze = app.add_subcommand("analyze", "corpus style report (mean/std of form metrics)");
    common(analyze);
    analyze->add_option("--dataset", f.dataset, "examples JSONL");
    analyze->add_option("--scores", f.scores, "log-prob JSONL for PPL(y|x)");
    analyze->add_flag("--unigram", f.unigram, "PPL from a unigram model fit on the corpus");

    auto* embed = app.add_subcommand("embed-toy", "feature-hashed embedding store");
    common(embed);
    embed->add_option("--dataset", f.dataset, "examples JSONL");
    embed->add_option("--triplets", f.triplets, "triplets JSONL");
    embed->add_option("--dim", f.dim, "embedding width");

    auto* synth = app.add_subcommand("synth", "synthetic triplets with a matching store");
    common(synth);
    synth->add_option("--n", f.n, "number of triplets");
    synth->add_option("--dim", f.dim, "embedding width");

    auto* train_cmd = app.add_subcommand("train", "train the ranker on triplets");
    common(train_cmd);
    train_cmd->add_option("--triplets", f.triplets, "triplets JSONL");
    train_cmd->add_option("--store", f.store, "SCAREMB1 embedding store");
    train_cmd->add_option("--quality", f.quality, "quality JSONL");
    train_cmd->add_flag("--no-quality-mask", f.no_quality_mask, "train without the quality mask");
    train_cmd->add_option("--dim", f.dim, "ranker width (default: store width)");
    train_cmd->add_option("--hidden", f.hidden, "reward head width");
    train_cmd->add_option("--lr", f.lr, "Adam learning rate");
    train_cmd->add_option("--sigma", f.sigma, "quality threshold");
    train_cmd->add_option("--max-epochs", f.epochs, "epoch limit");
    train_cmd->add_option("--patience", f.patience, "early-stopping patience");
    train_cmd->add_option("--batch-size", f.batch_size, "mini-batch size");
    train_cmd->add_option("--val-fraction", f.val_fraction, "share of triplets held out for early stopping");

    auto* eval_cmd = app.add_subcommand("eval", "ranking accuracy on triplets");
    common(eval_cmd);
    eval_cmd->add_option("--params", f.params, "SCARPAR1 ranker file");
    eval_cmd->add_option("--triplets", f.triplets, "triplets JSONL");
    eval_cmd->add_option("--store", f.store, "SCAREMB1 embedding store");

    auto* select = app.add_subcommand("select", "top-k% selection manifest");
    common(select);
    select->add_option("--dataset", f.dataset, "examples JSONL");
    select->add_option("--params", f.params, "SCARPAR1 ranker file");
    select->add_option("--store", f.store, "SCAREMB1 embedding store");
    select->add_option("--k", f.k, "percent to keep, in (0, 100]");
    select->add_option("--baseline", f.baseline, "random|longest|perplexity|ifd instead of the ranker");
    select->add_option("--scores", f.scores, "log-prob JSONL with <id>:cond and <id>:uncond");
    select->add_flag("--unigram", f.unigram, "unigram fallback scores");

    auto* cmi_cmd = app.add_subcommand("cmi", "conditional mutual information estimates");
    common(cmi_cmd);
    cmi_cmd->add_option("--samples", f.samples, "CMI samples JSONL");

    auto* filter = app.add_subcommand("filter-surprisal", "drop triplets whose rewrite shifts PPL");
    common(filter);
    filter->add_option("--triplets", f.triplets, "triplets JSONL");
    filter->add_option("--scores", f.scores, "log-prob JSONL keyed <id>:<role>");
    filter->add_flag("--unigram", f.unigram, "unigram fallback scores");
    filter->add_option("--abs-tol", f.abs_tol, "max |PPL(referenced) - PPL(human)|");
    filter->add_option("--cap", f.cap, "max PPL(referenced)");

    auto* dedup = app.add_subcommand("dedup", "drop exact duplicate examples");
    common(dedup);
    dedup->add_option("--dataset", f.dataset, "examples JSONL");

    auto* rate = app.add_subcommand("rate", "quality scores from a remote judge");
    common(rate);
    rate->add_option("--dataset", f.dataset, "examples JSONL");
    rate->add_option("--triplets", f.triplets, "triplets JSONL");
    rate->add_option("--domain", f.domain, "code|open");
    rate->add_option("--judge-url", f.judge_url, "judge endpoint (default $SCAR_JUDGE_URL)");

    std::vector<const char*> argv{"scar"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    CLI::App* sub = app.get_subcommands().front();
    try {
        Resolver r(*sub, load_config(f.config));
        r.resolved["command"] = sub->get_name();
        const auto& name = sub->get_name();
        if (name == "analyze") return cmd_analyze(f, r, out);
        if (name == "embed-toy") return cmd_embed_toy(f, r, out);
        if (name == "synth") return cmd_synth(f, r, out);
        if (name == "train") return cmd_train(f, r, out);
        if (name == "eval") return cmd_eval(f, r, out);
        if (name == "select") return cmd_select(f, r, out);
        if (name == "cmi") return cmd_cmi(f, r, out);
        if (name == "filter-surprisal") return cmd_filter_surprisal(f, r, out);
        if (name == "dedup") return cmd_dedup(f, r, out);
        if (name == "rate") return cmd_rate(f, r, out);
        err << "unknown command " << name << "\n";
        return 2;
    } catch (const Error& e) {
        err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const fs::filesystem_error& e) {
        err << "error (io): " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace scar::cli
