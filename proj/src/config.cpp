#include "guardprobe/config.hpp"

#include <fstream>
#include <sstream>

#include "guardprobe/remote.hpp"
#include "guardprobe/util.hpp"

namespace guardprobe {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open file: " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

size_t line_of_offset(const std::string& text, size_t byte_offset) {
  size_t line = 1;
  for (size_t i = 0; i < byte_offset && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ConfigError(where + ": missing required key '" + key + "'");
  }
  return *it;
}

std::vector<std::string> string_list(const json& arr, const std::string& where) {
  if (!arr.is_array()) {
    throw ConfigError(where + ": expected an array of strings");
  }
  std::vector<std::string> out;
  for (const json& v : arr) {
    if (!v.is_string()) throw ConfigError(where + ": expected strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

SearchMode parse_mode(const std::string& s, const std::string& where) {
  if (s == "gradient_guided") return SearchMode::kGradientGuided;
  if (s == "coordinate_free") return SearchMode::kCoordinateFree;
  throw ConfigError(where + ": unknown search_mode '" + s + "'");
}

PrefixInit parse_init(const std::string& s, const std::string& where) {
  if (s == "filler") return PrefixInit::kFiller;
  if (s == "random") return PrefixInit::kRandom;
  throw ConfigError(where + ": unknown prefix init '" + s + "'");
}

}  // namespace

const Guardrail& Registry::guard(const std::string& id) const {
  return *guard_ptr(id);
}

std::shared_ptr<const Guardrail> Registry::guard_ptr(const std::string& id) const {
  auto it = guards.find(id);
  if (it == guards.end()) {
    throw ConfigError("unknown guard id '" + id + "'");
  }
  return it->second;
}

const WhiteBoxGuard& Registry::white_box_guard(const std::string& id) const {
  const Guardrail& g = guard(id);
  const auto* wb = dynamic_cast<const WhiteBoxGuard*>(&g);
  if (wb == nullptr || g.spec().access != Access::kWhiteBox) {
    throw AccessError("guard '" + id + "' does not provide white-box access");
  }
  return *wb;
}

const SafetyScorer* Registry::scorer(const std::string& id) const {
  if (id.empty()) return nullptr;
  auto it = scorers.find(id);
  if (it == scorers.end()) {
    throw ConfigError("unknown scorer id '" + id + "'");
  }
  return it->second.get();
}

const RepeatTemplate& Registry::repeat_template(const std::string& id) const {
  for (const RepeatTemplate& t : templates) {
    if (t.id == id) return t;
  }
  throw ConfigError("unknown repeat template '" + id + "'");
}

std::shared_ptr<Agent> Registry::build_agent(const std::string& id) const {
  auto it = agents.find(id);
  if (it == agents.end()) {
    throw ConfigError("unknown agent id '" + id + "'");
  }
  const AgentBlueprint& bp = it->second;

  std::shared_ptr<const Responder> responder;
  if (bp.responder_kind == "echo") {
    responder = std::make_shared<EchoResponder>();
  } else if (bp.responder_kind == "fixed") {
    responder = std::make_shared<FixedResponder>(bp.fixed_reply);
  } else if (bp.responder_kind == "repeater") {
    responder = std::make_shared<TemplateRepeaterResponder>(templates, bp.drop_prob,
                                                            bp.responder_seed);
  } else if (bp.responder_kind == "remote") {
    responder = std::make_shared<RemoteResponder>(
        RemoteOptions{bp.endpoint, bp.api_key_env, bp.timeout_ms, bp.retries});
  } else {
    throw ConfigError("agent '" + id + "': unknown responder kind '" + bp.responder_kind + "'");
  }

  std::shared_ptr<const Guardrail> input;
  std::shared_ptr<const Guardrail> output;
  if (bp.config.input_guard_id) input = guard_ptr(*bp.config.input_guard_id);
  if (bp.config.output_guard_id) output = guard_ptr(*bp.config.output_guard_id);
  return std::make_shared<Agent>(bp.config.id, std::move(responder), std::move(input),
                                 std::move(output), bp.config.refusal_sentinel);
}

QuerySet load_query_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open query file: " + path.string());
  }
  QuerySet qs;
  std::string line;
  size_t index = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    char id[16];
    std::snprintf(id, sizeof(id), "q%03zu", index++);
    qs.queries.push_back(Query{id, line});
  }
  qs.validate();
  return qs;
}

std::string queries_digest(const QuerySet& qs) {
  std::string blob;
  for (const Query& q : qs.queries) {
    blob += q.id;
    blob += '\x1f';
    blob += q.text;
    blob += '\x1e';
  }
  return digest_hex(blob);
}

ProjectConfig config_from_json(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) {
    throw ConfigError("config: top level must be an object");
  }
  ProjectConfig cfg;
  cfg.raw = doc;
  cfg.digest = digest_hex(doc.dump());
  cfg.base_dir = base_dir;

  // --- tokenizers (mutable while guard vocabularies are interned) ---
  std::map<std::string, std::shared_ptr<Tokenizer>> mutable_toks;
  for (const json& t : require(doc, "tokenizers", "config")) {
    const std::string id = require(t, "id", "tokenizers[]").get<std::string>();
    std::vector<std::string> vocab;
    if (t.contains("vocab_path")) {
      const fs::path vp = resolve(base_dir, t["vocab_path"].get<std::string>());
      std::istringstream ss(read_text_file(vp));
      std::string line;
      while (std::getline(ss, line)) {
        if (!line.empty() && line[0] != '#') vocab.push_back(line);
      }
    } else {
      vocab = string_list(require(t, "vocab", "tokenizers[" + id + "]"),
                          "tokenizers[" + id + "].vocab");
    }
    if (!mutable_toks.emplace(id, std::make_shared<Tokenizer>(id, std::move(vocab))).second) {
      throw ConfigError("duplicate tokenizer id '" + id + "'");
    }
  }
  auto tokenizer_for = [&](const json& entry, const std::string& where) {
    const std::string tid = require(entry, "tokenizer", where).get<std::string>();
    auto it = mutable_toks.find(tid);
    if (it == mutable_toks.end()) {
      throw ConfigError(where + ": unknown tokenizer '" + tid + "'");
    }
    return it->second;
  };

  // Trigger/flag/pattern words must be reachable by the optimizer, so they
  // are interned into their tokenizer before guard construction.
  if (doc.contains("guards")) {
    for (const json& g : doc["guards"]) {
      const std::string kind = g.value("kind", "");
      if (kind == "remote") continue;
      auto tok = tokenizer_for(g, "guards[]");
      for (const char* key : {"triggers", "pattern"}) {
        if (g.contains(key)) {
          for (const std::string& w : string_list(g[key], std::string("guards[].") + key)) {
            tok->intern(w);
          }
        }
      }
      if (g.contains("weights")) {
        for (const auto& item : g["weights"].items()) {
          tok->intern(item.key());
        }
      }
    }
  }
  if (doc.contains("scorers")) {
    for (const json& s : doc["scorers"]) {
      if (!s.contains("flags")) continue;
      auto tok = tokenizer_for(s, "scorers[]");
      for (const std::string& w : string_list(s["flags"], "scorers[].flags")) {
        tok->intern(w);
      }
    }
  }

  for (const auto& [id, tok] : mutable_toks) {
    cfg.registry.tokenizers.emplace(id, tok);
  }

  // --- guards ---
  for (const json& g : require(doc, "guards", "config")) {
    const std::string id = require(g, "id", "guards[]").get<std::string>();
    const std::string kind = require(g, "kind", "guards[" + id + "]").get<std::string>();
    const std::string where = "guards[" + id + "]";
    std::shared_ptr<const Guardrail> guard;
    if (kind == "keyword") {
      auto tok = tokenizer_for(g, where);
      guard = std::make_shared<KeywordGuard>(
          GuardrailSpec{id, Access::kWhiteBox, tok->id()}, tok,
          string_list(require(g, "triggers", where), where + ".triggers"),
          g.value("trigger_weight", 4.0));
    } else if (kind == "linear") {
      auto tok = tokenizer_for(g, where);
      if (g.contains("weights") || g.contains("weights_path")) {
        json weight_doc;
        if (g.contains("weights_path")) {
          const fs::path wp = resolve(base_dir, g["weights_path"].get<std::string>());
          try {
            weight_doc = json::parse(read_text_file(wp));
          } catch (const json::exception& e) {
            throw ConfigError(where + ": bad weights file " + wp.string() + ": " + e.what());
          }
          for (const auto& item : weight_doc.items()) {
            tok->intern(item.key());
          }
        } else {
          weight_doc = g["weights"];
        }
        std::unordered_map<TokenId, double> weights;
        for (const auto& [word, value] : weight_doc.items()) {
          weights[tok->id_of(word)] = value.get<double>();
        }
        guard = std::make_shared<LinearGuard>(GuardrailSpec{id, Access::kWhiteBox, tok->id()},
                                              tok, std::move(weights), g.value("bias", 0.0),
                                              require(g, "threshold", where).get<double>());
      } else {
        guard = LinearGuard::keyword_equivalent(
            GuardrailSpec{id, Access::kWhiteBox, tok->id()}, tok,
            string_list(require(g, "triggers", where), where + ".triggers"),
            g.value("trigger_weight", 4.0));
      }
    } else if (kind == "tiny_classifier") {
      auto tok = tokenizer_for(g, where);
      TinyClassifierGuard::TrainConfig train;
      if (g.contains("train")) {
        const json& t = g["train"];
        train.embedding_dim = t.value("embedding_dim", train.embedding_dim);
        train.examples = t.value("examples", train.examples);
        train.sequence_length = t.value("sequence_length", train.sequence_length);
        train.steps = t.value("steps", train.steps);
        train.learning_rate = t.value("learning_rate", train.learning_rate);
        train.weight_decay = t.value("weight_decay", train.weight_decay);
        train.seed = t.value("seed", train.seed);
      }
      guard = std::make_shared<TinyClassifierGuard>(
          GuardrailSpec{id, Access::kWhiteBox, tok->id()}, tok,
          string_list(require(g, "pattern", where), where + ".pattern"), train);
    } else if (kind == "remote") {
      guard = std::make_shared<RemoteGuard>(
          id, RemoteOptions{require(g, "endpoint", where).get<std::string>(),
                            g.value("auth_env", ""), g.value("timeout_ms", 5000),
                            g.value("retries", 2)});
    } else {
      throw ConfigError(where + ": unknown guard kind '" + kind + "'");
    }
    if (!cfg.registry.guards.emplace(id, std::move(guard)).second) {
      throw ConfigError("duplicate guard id '" + id + "'");
    }
  }

  // --- scorers ---
  if (doc.contains("scorers")) {
    for (const json& s : doc["scorers"]) {
      const std::string id = require(s, "id", "scorers[]").get<std::string>();
      const std::string where = "scorers[" + id + "]";
      const std::string kind = require(s, "kind", where).get<std::string>();
      std::shared_ptr<const SafetyScorer> scorer;
      if (kind == "token_flag") {
        auto tok = tokenizer_for(s, where);
        std::vector<std::string> flags;
        if (s.contains("flags")) {
          flags = string_list(s["flags"], where + ".flags");
        }
        scorer = std::make_shared<TokenFlagScorer>(id, tok, flags);
      } else if (kind == "remote") {
        std::shared_ptr<const Tokenizer> tok;
        if (s.contains("tokenizer")) tok = tokenizer_for(s, where);
        scorer = std::make_shared<RemoteScorer>(
            id, tok,
            RemoteOptions{require(s, "endpoint", where).get<std::string>(),
                          s.value("auth_env", ""), s.value("timeout_ms", 5000),
                          s.value("retries", 2)});
      } else {
        throw ConfigError(where + ": unknown scorer kind '" + kind + "'");
      }
      if (!cfg.registry.scorers.emplace(id, std::move(scorer)).second) {
        throw ConfigError("duplicate scorer id '" + id + "'");
      }
    }
  }

  // --- templates (builtin set plus any declared extras) ---
  cfg.registry.templates = builtin_templates();
  if (doc.contains("templates")) {
    for (const json& t : doc["templates"]) {
      RepeatTemplate extra{require(t, "id", "templates[]").get<std::string>(),
                           require(t, "pattern", "templates[]").get<std::string>()};
      extra.validate();
      cfg.registry.templates.push_back(std::move(extra));
    }
  }

  // --- agents ---
  if (doc.contains("agents")) {
    for (const json& a : doc["agents"]) {
      AgentBlueprint bp;
      bp.config.id = require(a, "id", "agents[]").get<std::string>();
      const std::string where = "agents[" + bp.config.id + "]";
      bp.responder_kind = require(a, "responder", where).get<std::string>();
      if (a.contains("input_guard") && !a["input_guard"].is_null()) {
        bp.config.input_guard_id = a["input_guard"].get<std::string>();
        cfg.registry.guard(*bp.config.input_guard_id);  // validate now
      }
      if (a.contains("output_guard") && !a["output_guard"].is_null()) {
        bp.config.output_guard_id = a["output_guard"].get<std::string>();
        cfg.registry.guard(*bp.config.output_guard_id);
      }
      bp.config.refusal_sentinel = a.value("refusal_sentinel", std::string(kDefaultRefusalSentinel));
      bp.fixed_reply = a.value("reply", "");
      bp.drop_prob = a.value("drop_prob", 0.0);
      bp.responder_seed = a.value("responder_seed", std::uint64_t{0});
      bp.endpoint = a.value("endpoint", "");
      bp.api_key_env = a.value("auth_env", "");
      bp.timeout_ms = a.value("timeout_ms", 5000);
      bp.retries = a.value("retries", 2);
      if (!cfg.registry.agents.emplace(bp.config.id, std::move(bp)).second) {
        throw ConfigError("duplicate agent id '" + a["id"].get<std::string>() + "'");
      }
    }
  }

  // --- queries ---
  if (doc.contains("queries")) {
    const json& q = doc["queries"];
    if (q.is_object() && q.contains("path")) {
      cfg.queries = load_query_file(resolve(base_dir, q["path"].get<std::string>()));
    } else if (q.is_array()) {
      size_t index = 0;
      for (const json& entry : q) {
        char id[16];
        std::snprintf(id, sizeof(id), "q%03zu", index++);
        if (entry.is_string()) {
          cfg.queries.queries.push_back(Query{id, entry.get<std::string>()});
        } else {
          cfg.queries.queries.push_back(Query{require(entry, "id", "queries[]").get<std::string>(),
                                              require(entry, "text", "queries[]").get<std::string>()});
        }
      }
      cfg.queries.validate();
    } else {
      throw ConfigError("queries: expected an array or {\"path\": ...}");
    }
  }
  cfg.query_digest = queries_digest(cfg.queries);

  // --- optimizer ---
  if (doc.contains("optimizer")) {
    const json& o = doc["optimizer"];
    OptimizerConfig& oc = cfg.optimizer;
    oc.prefix_length = o.value("prefix_length", oc.prefix_length);
    oc.alpha = o.value("alpha", oc.alpha);
    oc.beta = o.value("beta", oc.beta);
    oc.epochs = o.value("epochs", oc.epochs);
    oc.batch_size = o.value("batch_size", oc.batch_size);
    oc.top_k = o.value("top_k", oc.top_k);
    oc.seed = o.value("seed", oc.seed);
    oc.patience = o.value("patience", oc.patience);
    if (o.contains("search_mode")) {
      oc.search_mode = parse_mode(o["search_mode"].get<std::string>(), "optimizer.search_mode");
    }
    if (o.contains("init")) {
      oc.init = parse_init(o["init"].get<std::string>(), "optimizer.init");
    }
    cfg.candidate_id = o.value("candidate", "");
    cfg.scorer_id = o.value("scorer", "");
    cfg.workers = o.value("workers", size_t{1});
    try {
      oc.validate();
    } catch (const ParameterError& e) {
      throw ConfigError(std::string("optimizer: ") + e.what());
    }
  }

  // --- probe ---
  if (doc.contains("probe")) {
    const json& p = doc["probe"];
    cfg.probe.lambda = p.value("lambda", cfg.probe.lambda);
    cfg.probe.concurrency = p.value("concurrency", cfg.probe.concurrency);
    cfg.probe.min_completion = p.value("min_completion", cfg.probe.min_completion);
    cfg.template_id = p.value("template", cfg.template_id);
    if (p.value("agent_kind", "simulated") == "external") {
      cfg.probe.agent_kind = AgentKind::kExternal;
    }
    if (p.contains("refusal_patterns_path")) {
      const fs::path rp = resolve(base_dir, p["refusal_patterns_path"].get<std::string>());
      const json patterns = json::parse(read_text_file(rp));
      cfg.probe.catalog.phrases = string_list(patterns, "refusal patterns file");
    }
    if (!(cfg.probe.lambda >= 1.0)) {
      throw ConfigError("probe.lambda must be >= 1");
    }
  }
  cfg.registry.repeat_template(cfg.template_id);  // validate the reference

  // --- paths ---
  cfg.out_dir = resolve(base_dir, doc.contains("paths") ? doc["paths"].value("out_dir", "runs")
                                                        : std::string("runs"));
  cfg.cache_dir =
      resolve(base_dir, doc.contains("paths") ? doc["paths"].value("cache_dir", "cache")
                                              : std::string("cache"));

  // Digest of the sections that define guard behavior, for the manifest.
  json registry_view;
  registry_view["tokenizers"] = doc.value("tokenizers", json::array());
  registry_view["guards"] = doc.value("guards", json::array());
  registry_view["scorers"] = doc.value("scorers", json::array());
  cfg.registry_digest = digest_hex(registry_view.dump());

  return cfg;
}

ProjectConfig load_config(const fs::path& path) {
  const std::string text = read_text_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ":" + std::to_string(line_of_offset(text, e.byte)) + ": " +
                      e.what());
  }
  try {
    return config_from_json(doc, path.parent_path().empty() ? fs::path(".")
                                                            : path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace guardprobe
