#include <doctest.h>

#include <atomic>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "scar/error.hpp"
#include "scar/quality.hpp"
#include "support.hpp"

using namespace scar;

namespace {

// Local judge stub on an ephemeral port; `reply` decides each response.
class StubJudge {
public:
    explicit StubJudge(std::function<void(const httplib::Request&, httplib::Response&)> reply) {
        server_.Post("/judge", [this, reply](const httplib::Request& req, httplib::Response& res) {
            ++hits;
            last_auth = req.get_header_value("Authorization");
            last_body = req.body;
            reply(req, res);
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~StubJudge() {
        server_.stop();
        thread_.join();
    }

    JudgeOptions options() const {
        JudgeOptions o;
        o.endpoint = "http://127.0.0.1:" + std::to_string(port_) + "/judge";
        o.initial_backoff = std::chrono::milliseconds(1);
        o.timeout = std::chrono::seconds(5);
        return o;
    }

    std::atomic<int> hits{0};
    std::string last_auth;
    std::string last_body;

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

QualityRecord ask(const JudgeOptions& o) {
    return judge_remote(o, "ex1", QualityRole::human, "Write a loop", "for i in x: pass",
                        JudgeDomain::code);
}

}  // namespace

TEST_CASE("quality value") {
    CHECK(quality_of({"a", QualityRole::single, 4, 5}) == 4.5);
    CHECK(quality_of({"a", QualityRole::single, 1, 1}) == 1.0);
    CHECK(quality_of({"a", QualityRole::single, 5, 5}) == 5.0);
    CHECK(quality_key("t1", QualityRole::referenced) == "t1:referenced");
    CHECK(parse_quality_role("direct") == QualityRole::direct);
    CHECK(testing::error_kind([] { parse_quality_role("judge"); }) == ErrorKind::argument);
}

TEST_CASE("quality files") {
    const auto t = parse_quality(
        R"({"id":"t1","role":"human","helpfulness":4,"correctness":3}
{"id":"t1","role":"direct","helpfulness":5,"correctness":5}
)");
    CHECK(t.size() == 2);
    CHECK(quality_of(t.at("t1:human")) == 3.5);

    CHECK(testing::error_kind([] {
              parse_quality(R"({"id":"a","role":"human","helpfulness":6,"correctness":3})");
          }) == ErrorKind::validation);
    CHECK(testing::error_kind([] {
              parse_quality(R"({"id":"a","role":"human","helpfulness":0.5,"correctness":3})");
          }) == ErrorKind::validation);
    CHECK(testing::error_kind([] {
              parse_quality(R"({"id":"a","role":"human","helpfulness":3})");
          }) == ErrorKind::schema);
    CHECK(testing::error_kind([] {
              parse_quality(
                  "{\"id\":\"a\",\"role\":\"human\",\"helpfulness\":3,\"correctness\":3}\n"
                  "{\"id\":\"a\",\"role\":\"human\",\"helpfulness\":4,\"correctness\":3}\n");
          }) == ErrorKind::duplicate_id);

    const auto dir = testing::temp_dir("quality");
    std::ofstream(dir / "q.jsonl") << R"({"id":"x","role":"single","helpfulness":2,"correctness":2})"
                                   << "\n";
    CHECK(load_quality(dir / "q.jsonl").count("x:single") == 1);
}

TEST_CASE("pair mask") {
    QualityTable q;
    q["t:direct"] = {"t", QualityRole::direct, 4.5, 4.5};
    q["t:referenced"] = {"t", QualityRole::referenced, 4.0, 4.0};
    q["t:human"] = {"t", QualityRole::human, 2.0, 2.0};
    CHECK(pair_mask("t", q, 3.0) == PairMask{true, false, false});
    CHECK(pair_mask("t", q, 0.0) == PairMask{true, true, true});
    CHECK(pair_mask("t", q, 5.0) == PairMask{false, false, false});
    // Strict: a score equal to sigma does not pass.
    CHECK(pair_mask("t", q, 4.0) == PairMask{false, false, false});
    CHECK(testing::error_kind([&] { pair_mask("u", q, 3.0); }) == ErrorKind::lookup);
}

TEST_CASE("judge prompts") {
    const std::string x = "Sort a list {quickly}";
    const std::string y = "Use sorted(xs) {instruction}";
    for (auto domain : {JudgeDomain::code, JudgeDomain::open}) {
        const auto prompt = render_judge_prompt(x, y, domain);
        CHECK(prompt.find(x) != std::string::npos);
        CHECK(prompt.find(y) != std::string::npos);
        CHECK(prompt.find("helpfulness") != std::string::npos);
        CHECK(prompt.find("correctness") != std::string::npos);
    }
    CHECK(render_judge_prompt(x, y, "code") == render_judge_prompt(x, y, JudgeDomain::code));
    CHECK(render_judge_prompt(x, y, "code") != render_judge_prompt(x, y, "open"));
    CHECK(testing::error_kind([&] { render_judge_prompt(x, y, "poetry"); }) == ErrorKind::argument);
    CHECK_FALSE(judge_template_version().empty());
}

TEST_CASE("remote judge") {
    SUBCASE("scores pass through") {
        StubJudge judge([](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"helpfulness": 4, "correctness": 5})", "application/json");
        });
        auto o = judge.options();
        o.api_key = "k123";
        const auto rec = ask(o);
        CHECK(rec.helpfulness == 4.0);
        CHECK(rec.correctness == 5.0);
        CHECK(rec.id == "ex1");
        CHECK(rec.role == QualityRole::human);
        CHECK(judge.last_auth == "Bearer k123");
        const auto body = nlohmann::json::parse(judge.last_body);
        CHECK(body.at("domain") == "code");
        CHECK(body.at("response") == "for i in x: pass");
    }
    SUBCASE("three server errors exhaust the retries") {
        StubJudge judge([](const httplib::Request&, httplib::Response& res) { res.status = 500; });
        CHECK(testing::error_kind([&] { ask(judge.options()); }) == ErrorKind::transport);
        CHECK(judge.hits == 3);
    }
    SUBCASE("a transient failure is retried") {
        StubJudge judge([count = std::make_shared<int>(0)](const httplib::Request&,
                                                           httplib::Response& res) {
            if ((*count)++ == 0) {
                res.status = 503;
                return;
            }
            res.set_content(R"({"helpfulness": 2, "correctness": 3})", "application/json");
        });
        CHECK(ask(judge.options()).correctness == 3.0);
        CHECK(judge.hits == 2);
    }
    SUBCASE("out-of-range score") {
        StubJudge judge([](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"helpfulness": 7})", "application/json");
        });
        CHECK(testing::error_kind([&] { ask(judge.options()); }) == ErrorKind::validation);
        CHECK(judge.hits == 1);
    }
    SUBCASE("malformed replies") {
        StubJudge judge([](const httplib::Request&, httplib::Response& res) {
            res.set_content("not json", "text/plain");
        });
        CHECK(testing::error_kind([&] { ask(judge.options()); }) == ErrorKind::protocol);
    }
    SUBCASE("client errors are not retried") {
        StubJudge judge([](const httplib::Request&, httplib::Response& res) { res.status = 401; });
        CHECK(testing::error_kind([&] { ask(judge.options()); }) == ErrorKind::protocol);
        CHECK(judge.hits == 1);
    }
    SUBCASE("nobody listening") {
        JudgeOptions o;
        o.endpoint = "http://127.0.0.1:1/judge";
        o.initial_backoff = std::chrono::milliseconds(1);
        o.attempts = 2;
        CHECK(testing::error_kind([&] { ask(o); }) == ErrorKind::transport);
    }
    SUBCASE("endpoint must be http") {
        JudgeOptions o;
        o.endpoint = "ftp://example/judge";
        CHECK(testing::error_kind([&] { ask(o); }) == ErrorKind::config);
    }
}
