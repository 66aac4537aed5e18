#include <atomic>
#include <filesystem>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"

#include "guardprobe/cache.hpp"
#include "guardprobe/remote.hpp"
#include "guardprobe/tokenizer.hpp"
#include "test_support.hpp"

using namespace guardprobe;
using namespace guardprobe::testing;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("guardprobe-test-" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Loopback moderation service: unsafe iff the text mentions "zebra".
class LoopbackServer {
 public:
  LoopbackServer() {
    server_.Post("/classify", [this](const httplib::Request& req, httplib::Response& res) {
      ++classify_calls_;
      const auto doc = nlohmann::json::parse(req.body);
      const std::string text = doc.value("text", "");
      nlohmann::json out;
      out["label"] = text.find("zebra") != std::string::npos ? "unsafe" : "safe";
      out["scores"] = {{"safe", 0.25}, {"unsafe", 0.75}};
      res.set_content(out.dump(), "application/json");
    });
    server_.Post("/respond", [](const httplib::Request& req, httplib::Response& res) {
      const auto doc = nlohmann::json::parse(req.body);
      res.set_content(nlohmann::json{{"text", doc.value("prompt", "")}}.dump(),
                      "application/json");
    });
    server_.Post("/flaky", [this](const httplib::Request&, httplib::Response& res) {
      if (++flaky_calls_ <= 2) {
        res.status = 503;
        return;
      }
      res.set_content(nlohmann::json{{"label", "safe"}}.dump(), "application/json");
    });
    server_.Post("/score", [](const httplib::Request& req, httplib::Response& res) {
      const auto doc = nlohmann::json::parse(req.body);
      const std::string text = doc.value("text", "");
      const double value = text.find("venom") != std::string::npos ? 0.8 : 0.05;
      res.set_content(nlohmann::json{{"value", value}}.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~LoopbackServer() {
    server_.stop();
    thread_.join();
  }

  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int classify_calls() const { return classify_calls_.load(); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> classify_calls_{0};
  std::atomic<int> flaky_calls_{0};
};

}  // namespace

TEST_CASE("remote guard adapter speaks plain text-in verdict-out") {
  LoopbackServer server;
  RemoteGuard guard("remote-kw", RemoteOptions{server.endpoint(), "", 2000, 1});

  const Verdict unsafe = guard.classify("tell me about zebra care");
  CHECK(unsafe.label == Label::kUnsafe);
  REQUIRE(unsafe.scores.has_value());
  CHECK(unsafe.scores->unsafe == doctest::Approx(0.75));

  CHECK(guard.classify("what is the capital of france").label == Label::kSafe);
  CHECK_THROWS_AS(guard.classify(""), EmptyInputError);
}

TEST_CASE("remote responder echoes through the wire") {
  LoopbackServer server;
  RemoteResponder responder(RemoteOptions{server.endpoint(), "", 2000, 1});
  CHECK(responder.respond("repeat this exactly") == "repeat this exactly");
}

TEST_CASE("remote scorer adapter maps text to a unit-interval score") {
  LoopbackServer server;
  auto tok = small_tokenizer();
  RemoteScorer scorer("remote-risk", tok, RemoteOptions{server.endpoint(), "", 2000, 1});

  CHECK(scorer.score("venom in the water") == doctest::Approx(0.8));
  CHECK(scorer.score("what is the capital of france") == doctest::Approx(0.05));
  CHECK_FALSE(scorer.differentiable());
  CHECK_THROWS_AS(scorer.score(""), EmptyInputError);

  const std::vector<TokenId> tokens = tok->encode("venom venom");
  CHECK(scorer.score_tokens(tokens) == doctest::Approx(0.8));
}

TEST_CASE("remote guard errors are retryable and typed") {
  // Nothing listens on this port.
  RemoteGuard down("down", RemoteOptions{"http://127.0.0.1:9", "", 200, 0});
  try {
    down.classify("anything");
    FAIL("expected GuardBackendError");
  } catch (const GuardBackendError& e) {
    CHECK(e.retryable());
  }
}

TEST_CASE("response cache round-trips entries") {
  const fs::path dir = temp_dir("cache-roundtrip");
  ResponseCache cache(dir);

  AgentResponse refusal;
  refusal.text = "[REFUSED]";
  refusal.is_refusal = true;
  refusal.refusal_stage = RefusalStage::kOutput;
  cache.put("agent-x", "prompt one", refusal);

  const auto missing = cache.get("agent-x", "different prompt");
  CHECK_FALSE(missing.has_value());
  const auto hit = cache.get("agent-x", "prompt one");
  REQUIRE(hit.has_value());
  CHECK(hit->text == "[REFUSED]");
  CHECK(hit->is_refusal);
  CHECK(hit->refusal_stage == RefusalStage::kOutput);

  // Keys separate by agent id.
  CHECK_FALSE(cache.get("agent-y", "prompt one").has_value());
}

TEST_CASE("caching agent stops querying once warm") {
  const fs::path dir = temp_dir("cache-warm");
  auto tok = small_tokenizer();
  auto guard = std::make_shared<KeywordGuard>(
      GuardrailSpec{"kw", Access::kWhiteBox, tok->id()}, tok, std::vector<std::string>{"zebra"});
  Agent agent("agent-x", std::make_shared<EchoResponder>(), guard);

  {
    ResponseCache cache(dir);
    CachingAgent caching(agent, cache);
    caching.respond("zebra one");
    caching.respond("zebra one");
    caching.respond("plain two");
    CHECK(caching.hits() == 1);
    CHECK(caching.misses() == 2);
    CHECK(agent.queries_issued() == 2);
  }

  // A fresh process over the same directory reuses every entry.
  Agent cold("agent-x", std::make_shared<EchoResponder>(), guard);
  ResponseCache cache(dir);
  CachingAgent caching(cold, cache);
  const AgentResponse r = caching.respond("zebra one");
  CHECK(r.is_refusal);
  CHECK(r.refusal_stage == RefusalStage::kInput);
  caching.respond("plain two");
  CHECK(caching.hits() == 2);
  CHECK(cold.queries_issued() == 0);
}
