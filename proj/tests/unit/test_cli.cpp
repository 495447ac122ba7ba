#include <doctest.h>

#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "scar/corpus.hpp"
#include "scar/embeddings.hpp"
#include "scar/jsonl.hpp"
#include "scar/ranker.hpp"
#include "scar/selection.hpp"
#include "scar/stylometry.hpp"
#include "support.hpp"

using namespace scar;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = 0;
    std::string out;
    std::string err;
};

Run scar_cli(std::vector<std::string> args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) { return jsonl::read_file(p); }

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

// The fixture texts as an examples file.
fs::path fixture_dataset(const fs::path& dir) {
    Dataset ds;
    for (const auto& t : testing::style_fixture()) {
        ds.records.push_back({t.id, "Explain " + t.id, t.text, "", {}, 0});
    }
    const auto path = dir / "fixture.jsonl";
    write_examples(ds, path);
    return path;
}

}  // namespace

TEST_CASE("help, usage errors and exit codes") {
    CHECK(scar_cli({"--help"}).code == 0);
    CHECK(scar_cli({"train", "--help"}).code == 0);
    CHECK(scar_cli({}).code == 2);
    CHECK(scar_cli({"frobnicate"}).code == 2);
    CHECK(scar_cli({"select", "--k", "many"}).code == 2);

    const auto missing = scar_cli({"analyze", "--dataset", "/nonexistent/data.jsonl"});
    CHECK(missing.code == 2);
    CHECK(missing.err.find("not found") != std::string::npos);

    CHECK(cli::exit_code(ErrorKind::config) == 2);
    CHECK(cli::exit_code(ErrorKind::io) == 4);
    CHECK(cli::exit_code(ErrorKind::transport) == 4);
    CHECK(cli::exit_code(ErrorKind::schema) == 3);
    CHECK(cli::fingerprint(nlohmann::ordered_json{{"a", 1}}).size() == 16);
}

TEST_CASE("analyze matches the library report") {
    const auto dir = testing::temp_dir("cli-analyze");
    const auto data = fixture_dataset(dir);
    const auto r = scar_cli({"analyze", "--dataset", data.string(), "--unigram", "--out",
                             (dir / "out").string()});
    REQUIRE(r.code == 0);
    const auto report = read_json(dir / "out" / "style_report.json");

    std::vector<style::StyleProfile> profiles;
    for (const auto& t : testing::style_fixture()) profiles.push_back(style::style_profile(t.text));
    const auto want = style::corpus_report(profiles);
    CHECK(report.at("ttr_functional").at("mean").get<double>() == want.ttr_functional.mean);
    CHECK(report.at("flesch").at("std").get<double>() == want.flesch.std);
    CHECK(report.at("n_texts") == 12);
    CHECK(report.contains("ppl"));
    CHECK(report.at("config_hash").get<std::string>().size() == 16);
    CHECK(fs::exists(dir / "out" / "style_report.txt"));
}

TEST_CASE("config file keys apply unless a flag overrides them") {
    const auto dir = testing::temp_dir("cli-config");
    const auto data = fixture_dataset(dir);
    std::ofstream(dir / "cfg.json") << R"({"k": 50, "baseline": "longest"})";
    REQUIRE(scar_cli({"select", "--dataset", data.string(), "--config", (dir / "cfg.json").string(),
                      "--out", (dir / "a").string()})
                .code == 0);
    REQUIRE(scar_cli({"select", "--dataset", data.string(), "--config", (dir / "cfg.json").string(),
                      "--k", "25", "--out", (dir / "b").string()})
                .code == 0);
    const auto a = nlohmann::json::parse(slurp(dir / "a" / "manifest.jsonl").substr(
        0, slurp(dir / "a" / "manifest.jsonl").find('\n')));
    const auto b = nlohmann::json::parse(slurp(dir / "b" / "manifest.jsonl").substr(
        0, slurp(dir / "b" / "manifest.jsonl").find('\n')));
    CHECK(a.at("count") == 6);
    CHECK(b.at("count") == 3);
    CHECK(a.at("method") == "longest");
    CHECK(a.at("config_hash") != b.at("config_hash"));

    std::ofstream(dir / "bad.json") << "[1, 2]";
    CHECK(scar_cli({"select", "--dataset", data.string(), "--config", (dir / "bad.json").string()})
              .code == 2);
}

TEST_CASE("embed-toy writes one record per text, deterministically") {
    const auto dir = testing::temp_dir("cli-embed");
    const auto data = fixture_dataset(dir);
    REQUIRE(scar_cli({"embed-toy", "--dataset", data.string(), "--dim", "16", "--out",
                      (dir / "a").string()})
                .code == 0);
    REQUIRE(scar_cli({"embed-toy", "--dataset", data.string(), "--dim", "16", "--out",
                      (dir / "b").string()})
                .code == 0);
    const auto store = open_store(dir / "a" / "embeddings.scaremb");
    CHECK(store.size() == 24);
    CHECK(store.dim() == 16);
    CHECK(slurp(dir / "a" / "embeddings.scaremb") == slurp(dir / "b" / "embeddings.scaremb"));
    CHECK(scar_cli({"embed-toy", "--out", dir.string()}).code == 2);
}

TEST_CASE("synthetic pipeline: synth, train, eval, select") {
    const auto dir = testing::temp_dir("cli-pipeline");
    const auto d = dir.string();
    REQUIRE(scar_cli({"synth", "--n", "200", "--dim", "8", "--seed", "3", "--out", d}).code == 0);
    const auto triplets = (dir / "triplets.jsonl").string();
    const auto store = (dir / "embeddings.scaremb").string();

    const std::vector<std::string> train_args{"train", "--triplets", triplets, "--store", store,
                                              "--no-quality-mask", "--hidden", "16",
                                              "--max-epochs", "5", "--lr", "0.005"};
    auto a = train_args;
    a.insert(a.end(), {"--out", (dir / "a").string()});
    auto b = train_args;
    b.insert(b.end(), {"--out", (dir / "b").string()});
    REQUIRE(scar_cli(a).code == 0);
    REQUIRE(scar_cli(b).code == 0);
    CHECK(slurp(dir / "a" / "ranker.scarpar") == slurp(dir / "b" / "ranker.scarpar"));
    CHECK(slurp(dir / "a" / "train_history.json") == slurp(dir / "b" / "train_history.json"));
    const auto history = read_json(dir / "a" / "train_history.json");
    CHECK(history.at("config").at("dim") == 8);
    CHECK(history.at("config").at("sigma") == 2.5);
    CHECK(history.at("n_val") == 20);

    const auto params = (dir / "a" / "ranker.scarpar").string();
    REQUIRE(scar_cli({"eval", "--params", params, "--triplets", triplets, "--store", store, "--out",
                      (dir / "a").string()})
                .code == 0);
    const auto eval = read_json(dir / "a" / "eval.json");
    const auto lib = evaluate(load_params(params), load_triplets(triplets), open_store(store));
    CHECK(eval.at("acc_full").get<double>() == lib.acc_full);
    CHECK(eval.at("n") == 200);

    SUBCASE("training needs a quality table or an explicit opt-out") {
        CHECK(scar_cli({"train", "--triplets", triplets, "--store", store, "--out", d}).code == 2);
    }
    SUBCASE("a store of the wrong width is a data error") {
        CHECK(scar_cli({"train", "--triplets", triplets, "--store", store, "--no-quality-mask",
                        "--dim", "9", "--out", d})
                  .code == 3);
    }
    SUBCASE("select with the trained ranker") {
        // An examples file whose ids map onto the synthetic direct responses.
        const auto syn = open_store(store);
        std::vector<EmbeddingRecord> recs;
        Dataset ds;
        for (int i = 0; i < 10; ++i) {
            char id[16];
            std::snprintf(id, sizeof id, "syn-%06d", i);
            recs.push_back({std::string(id) + ":instruction",
                            syn.at(std::string(id) + ":instruction").cls,
                            syn.at(std::string(id) + ":instruction").pooled});
            const auto& resp = syn.at(std::string(id) + (i % 2 ? ":human" : ":direct"));
            recs.push_back({std::string(id) + ":response", resp.cls, resp.pooled});
            ds.records.push_back({id, "q", "r", "", {}, 0});
        }
        write_store(recs, dir / "select.scaremb");
        write_examples(ds, dir / "select.jsonl");
        REQUIRE(scar_cli({"select", "--dataset", (dir / "select.jsonl").string(), "--params", params,
                          "--store", (dir / "select.scaremb").string(), "--k", "50", "--threads",
                          "2", "--out", (dir / "sel").string()})
                    .code == 0);
        const auto text = slurp(dir / "sel" / "manifest.jsonl");
        const auto want = select_top_k(
            score_dataset(load_params(params), open_store(dir / "select.scaremb"), ds), 50.0);
        CHECK(std::count(text.begin(), text.end(), '\n') == 11);
        const auto header = nlohmann::json::parse(text.substr(0, text.find('\n')));
        CHECK(header.at("count") == want.count);
        CHECK(text.substr(text.find('\n') + 1) ==
              want.to_jsonl().substr(want.to_jsonl().find('\n') + 1));
    }
}

TEST_CASE("filter-surprisal and dedup wrap the library") {
    const auto dir = testing::temp_dir("cli-wrap");
    TripletSet ts;
    ts.records.push_back({"keep", "q", "human text", "referenced text", "direct", 0});
    ts.records.push_back({"drop", "q", "human text", "referenced text", "direct", 0});
    write_triplets(ts, dir / "t.jsonl");
    std::ofstream(dir / "s.jsonl")
        << R"({"id":"keep:referenced:cond","logprob_sum":-0.5877866649,"token_count":1})" << "\n"
        << R"({"id":"keep:human:cond","logprob_sum":-0.6151856390,"token_count":1})" << "\n"
        << R"({"id":"drop:referenced","logprob_sum":-1.3912819617,"token_count":1})" << "\n"
        << R"({"id":"drop:human","logprob_sum":-1.4861396,"token_count":1})" << "\n";
    REQUIRE(scar_cli({"filter-surprisal", "--triplets", (dir / "t.jsonl").string(), "--scores",
                      (dir / "s.jsonl").string(), "--out", dir.string()})
                .code == 0);
    const auto kept = load_triplets(dir / "filtered_triplets.jsonl");
    REQUIRE(kept.size() == 1);
    CHECK(kept.records[0].id == "keep");
    CHECK(read_json(dir / "filter_report.json").at("removed_ids") ==
          nlohmann::json::array({"drop"}));
    CHECK(scar_cli({"filter-surprisal", "--triplets", (dir / "t.jsonl").string()}).code == 2);

    Dataset ds;
    ds.records.push_back({"a", "x", "y", "", {}, 0});
    ds.records.push_back({"b", "x ", " y", "", {}, 0});
    ds.records.push_back({"c", "u", "v", "", {}, 0});
    write_examples(ds, dir / "d.jsonl");
    REQUIRE(scar_cli({"dedup", "--dataset", (dir / "d.jsonl").string(), "--out", dir.string()})
                .code == 0);
    CHECK(slurp(dir / "dedup.jsonl") == serialize_examples(dedup_exact(ds).first));
    CHECK(read_json(dir / "dedup_report.json").at("kept_map").at("b") == "a");
}

TEST_CASE("cmi subcommand") {
    const auto dir = testing::temp_dir("cli-cmi");
    std::ofstream(dir / "c.jsonl")
        << R"({"logp_c_given_x_p":-1,"logp_c_given_p":-2,"logp_p_given_x_c":-1,"logp_p_given_c":-1})"
        << "\n";
    REQUIRE(scar_cli({"cmi", "--samples", (dir / "c.jsonl").string(), "--out", dir.string()}).code ==
            0);
    const auto j = read_json(dir / "cmi.json");
    CHECK(j.at("i_semantic") == 1.0);
    CHECK(j.at("i_form") == 0.0);
}

TEST_CASE("rate without an endpoint is a config error") {
    const auto dir = testing::temp_dir("cli-rate");
    const auto data = fixture_dataset(dir);
    ::unsetenv("SCAR_JUDGE_URL");
    CHECK(scar_cli({"rate", "--dataset", data.string(), "--out", dir.string()}).code == 2);
}
