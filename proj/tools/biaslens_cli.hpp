// Copyright 2026 The biaslens Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// biaslens command-line front end.
//
//   biaslens db-index   --target T.jsonl --comparison C.jsonl [--out R.json]
//   biaslens augment    --input D.jsonl --producers P.json --out O.jsonl
//   biaslens stereotype --eval CAT.jsonl [--mode prose|literal]
//   biaslens mb-index   (--perplexity X | --logprobs F | --score-endpoint U)
//                       (--score S | --stereotype-report R) --dataset-size N
//
// Option precedence: command-line flags, then the --config file (TOML/INI,
// one [subcommand] section each; BIASLENS_CONFIG names a default), then
// built-in defaults.
//
// Exit codes: 0 success, 1 internal invariant failure, 2 usage / file / input
// errors, 3 provider (remote service) errors, 4 degenerate stereotype score.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "biaslens/biaslens.hpp"
#include "json.hpp"

namespace biaslens::cli {

using nlohmann::json;

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitUsage = 2,
  kExitProvider = 3,
  kExitDegenerate = 4,
};

inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument:
    case ErrorKind::kIo:
    case ErrorKind::kParse: return kExitUsage;
    case ErrorKind::kProvider: return kExitProvider;
    case ErrorKind::kDegenerate: return kExitDegenerate;
    case ErrorKind::kInvariant: return kExitInternal;
  }
  return kExitInternal;
}

// Shortest round-trip decimal, always with a fractional part or exponent.
inline std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, end);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

inline std::uint64_t resolve_seed(const std::string& raw) {
  if (raw == "random") {
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }
  std::uint64_t v = 0;
  auto [end, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
  require(ec == std::errc() && end == raw.data() + raw.size(), ErrorKind::kInvalidArgument,
          "--seed must be an unsigned integer or 'random', got '" + raw + "'");
  return v;
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::kIo, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  require(static_cast<bool>(out), ErrorKind::kIo, "write failed for " + path.string());
}

inline void require_file(const std::string& path, const std::string& flag) {
  require(std::filesystem::is_regular_file(path), ErrorKind::kIo,
          flag + ": file not found: " + path);
}

struct EmbedFlags {
  std::string endpoint;
  std::string model = "default";
  std::size_t dim = 256;
  std::size_t batch = 32;
  long timeout_ms = 30000;
  std::uint64_t seed = 0;
  std::string cache;

  void add_to(CLI::App& app) {
    app.add_option("--embed-endpoint", endpoint,
                   "Remote embedding service URL; omit for the offline hashed embedder");
    app.add_option("--embed-model", model, "Model name sent to the remote embedder");
    app.add_option("--embed-dim", dim, "Embedding dimension")->check(CLI::PositiveNumber);
    app.add_option("--embed-batch", batch, "Texts per remote request")->check(CLI::PositiveNumber);
    app.add_option("--embed-timeout-ms", timeout_ms, "Remote embedder timeout")
        ->check(CLI::PositiveNumber);
    app.add_option("--embed-seed", seed, "Hash seed of the offline embedder");
    app.add_option("--cache", cache, "Embedding cache file (created when missing)");
  }

  EmbeddingProviderConfig config() const {
    EmbeddingProviderConfig c;
    c.kind = endpoint.empty() ? ProviderKind::kFallback : ProviderKind::kRemote;
    c.endpoint = endpoint;
    c.model_name = model;
    c.dim = dim;
    c.batch_size = batch;
    c.timeout = std::chrono::milliseconds(timeout_ms);
    c.seed = seed;
    c.validate();
    return c;
  }

  EmbeddingCache open_cache() const {
    const auto cfg = config();
    if (cache.empty()) return EmbeddingCache(cfg.fingerprint());
    return EmbeddingCache::open(cache, cfg);
  }

  void save_cache(const EmbeddingCache& c) const {
    if (!cache.empty()) c.save(cache);
  }

  json to_json() const {
    const auto cfg = config();
    return {{"kind", to_string(cfg.kind)},
            {"endpoint", endpoint.empty() ? json(nullptr) : json(endpoint)},
            {"model", cfg.kind == ProviderKind::kRemote ? json(model) : json(nullptr)},
            {"dim", dim},
            {"batch", batch},
            {"timeout_ms", timeout_ms},
            {"seed", cfg.kind == ProviderKind::kFallback ? json(seed) : json(nullptr)},
            {"fingerprint", cfg.fingerprint()},
            {"cache", cache.empty() ? json(nullptr) : json(cache)}};
  }
};

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

// ---------------------------------------------------------------------------

struct DbIndexCommand {
  std::string target, comparison, out;
  std::string seed = "42";
  std::size_t k_min = 2, k_max = 0, samples = 1;
  double threshold = 0.5;
  EmbedFlags embed;

  void add_to(CLI::App& app) {
    app.add_option("--target", target, "Target corpus (JSONL)")->required();
    app.add_option("--comparison", comparison, "Offender / comparison corpus (JSONL)")->required();
    app.add_option("--out", out, "Report file (JSON)");
    app.add_option("--seed", seed, "Seed, or 'random'");
    app.add_option("--k-min", k_min, "Smallest cluster count tried")->check(CLI::Range(2, 1 << 20));
    app.add_option("--k-max", k_max, "Largest cluster count tried (0: min(16, N/5))");
    app.add_option("--samples", samples, "Comparison entries drawn")->check(CLI::PositiveNumber);
    app.add_option("--threshold", threshold, "db above this is flagged biased");
    embed.add_to(app);
  }

  int run(const std::string& config_file, Streams io) {
    require_file(target, "--target");
    require_file(comparison, "--comparison");
    const Corpus t = load_corpus(target);
    const Corpus c = load_corpus(comparison);
    DbConfig cfg;
    cfg.k_min = k_min;
    cfg.k_max = k_max;
    cfg.comparison_samples = samples;
    cfg.seed = resolve_seed(seed);
    cfg.threshold = threshold;
    const auto ecfg = embed.config();
    EmbeddingCache cache = embed.open_cache();
    const DbReport rep = db_index(t, c, ecfg, cache, cfg);
    embed.save_cache(cache);

    json effective = {{"subcommand", "db-index"},
                      {"config_file", config_file.empty() ? json(nullptr) : json(config_file)},
                      {"target", target},
                      {"comparison", comparison},
                      {"target_hash", corpus_hash(t).hex},
                      {"comparison_hash", corpus_hash(c).hex},
                      {"seed", cfg.seed},
                      {"k_min", cfg.k_min},
                      {"k_max", cfg.k_max},
                      {"samples", cfg.comparison_samples},
                      {"threshold", cfg.threshold},
                      {"kmeans",
                       {{"max_iter", cfg.kmeans.max_iter},
                        {"tol", cfg.kmeans.tol},
                        {"restarts", cfg.kmeans.restarts},
                        {"initial_k", cfg.initial_k}}},
                      {"embed", embed.to_json()}};
    if (!out.empty()) {
      write_json(out, report::envelope(report::kSchemaDbIndex, std::move(effective),
                                       report::to_json(rep)));
    }
    io.out << "db=" << format_number(rep.db) << " biased=" << (rep.biased ? "true" : "false")
           << " k=" << rep.chosen_k << "\n";
    return kExitOk;
  }
};

// ---------------------------------------------------------------------------

struct AugmentCommand {
  std::string input, producers, out, provenance, report_path, lexicon, morph_endpoint;
  std::string morph = "on";
  std::string upshift, downshift;  // empty: follow --morph
  std::string seed = "42";
  double downshift_ratio = 0.3, upshift_rate = 0.15;
  long morph_timeout_ms = 30000;
  EmbedFlags embed;

  void add_to(CLI::App& app) {
    const auto on_off = CLI::IsMember({"on", "off"});
    app.add_option("--input", input, "Corpus to augment (JSONL)")->required();
    app.add_option("--producers", producers, "Bias producer file (JSON)")->required();
    app.add_option("--out", out, "Augmented corpus (JSONL)")->required();
    app.add_option("--out-provenance", provenance,
                   "Provenance records (JSONL); default <out>.provenance.jsonl");
    app.add_option("--report", report_path, "Summary report (JSON)");
    app.add_option("--morph", morph, "Content morphism on|off")->check(on_off);
    app.add_option("--upshift", upshift, "Override upshift on|off")->check(on_off);
    app.add_option("--downshift", downshift, "Override downshift on|off")->check(on_off);
    app.add_option("--downshift-ratio", downshift_ratio, "Share of sentences kept");
    app.add_option("--upshift-rate", upshift_rate, "Share of content tokens replaced");
    app.add_option("--lexicon", lexicon, "Word list for offline upshift");
    app.add_option("--morph-endpoint", morph_endpoint, "Remote morph service URL");
    app.add_option("--morph-timeout-ms", morph_timeout_ms, "Remote morph timeout")
        ->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "Seed, or 'random'");
    embed.add_to(app);
  }

  int run(const std::string& config_file, Streams io) {
    require_file(input, "--input");
    require_file(producers, "--producers");
    const Corpus corpus = load_corpus(input);
    const auto prods = load_producers(producers);

    MorphConfig m;
    m.upshift_enabled = (upshift.empty() ? morph : upshift) == "on";
    m.downshift_enabled = (downshift.empty() ? morph : downshift) == "on";
    m.downshift_ratio = downshift_ratio;
    m.upshift_rate = upshift_rate;
    m.provider = morph_endpoint.empty() ? MorphProvider::kFallback : MorphProvider::kRemote;
    m.endpoint = morph_endpoint;
    m.timeout = std::chrono::milliseconds(morph_timeout_ms);
    m.seed = resolve_seed(seed);

    MorphContext ctx;
    ctx.embed = embed.config();
    EmbeddingCache cache = embed.open_cache();
    ctx.cache = &cache;
    if (!lexicon.empty()) {
      require_file(lexicon, "--lexicon");
      ctx.lexicon = Lexicon::load(lexicon);
    }
    require(!(m.upshift_enabled && m.provider == MorphProvider::kFallback && !ctx.lexicon),
            ErrorKind::kInvalidArgument, "offline upshift needs --lexicon (or --upshift off)");

    const AugmentResult res = augment_corpus(corpus, prods, m, ctx);
    embed.save_cache(cache);

    save_corpus(res.corpus, out);
    const std::string prov = provenance.empty() ? out + ".provenance.jsonl" : provenance;
    {
      std::ofstream pf(prov, std::ios::binary | std::ios::trunc);
      require(static_cast<bool>(pf), ErrorKind::kIo, "cannot write " + prov);
      for (const auto& r : res.records) pf << report::to_json(r).dump() << '\n';
      require(static_cast<bool>(pf), ErrorKind::kIo, "write failed for " + prov);
    }

    if (!report_path.empty()) {
      json producers_json = json::array();
      for (const auto& p : prods) {
        producers_json.push_back(
            {{"name", p.name}, {"biasers", p.biasers}, {"match_mode", to_string(p.match_mode)}});
      }
      json effective = {
          {"subcommand", "augment"},
          {"config_file", config_file.empty() ? json(nullptr) : json(config_file)},
          {"input", input},
          {"producers", producers},
          {"producer_sets", std::move(producers_json)},
          {"out", out},
          {"out_provenance", prov},
          {"upshift", m.upshift_enabled},
          {"downshift", m.downshift_enabled},
          {"downshift_ratio", m.downshift_ratio},
          {"upshift_rate", m.upshift_rate},
          {"morph_provider", m.provider == MorphProvider::kRemote ? "remote" : "fallback"},
          {"morph_endpoint", morph_endpoint.empty() ? json(nullptr) : json(morph_endpoint)},
          {"lexicon", lexicon.empty() ? json(nullptr) : json(lexicon)},
          {"seed", m.seed},
          {"embed", embed.to_json()}};
      write_json(report_path, report::envelope(report::kSchemaAugment, std::move(effective),
                                               report::augment_summary(res, corpus)));
    }

    io.out << "original=" << res.count(Origin::kOriginal)
           << " substitution=" << res.count(Origin::kSubstitution)
           << " upshift=" << res.count(Origin::kUpshift)
           << " downshift=" << res.count(Origin::kDownshift) << " total=" << res.corpus.size()
           << "\n";
    return kExitOk;
  }
};

// ---------------------------------------------------------------------------

struct StereotypeCommand {
  std::string eval, out, gen_endpoint;
  std::string mode = "prose";
  std::string seed = "42";
  long gen_timeout_ms = 60000;
  EmbedFlags embed;

  void add_to(CLI::App& app) {
    app.add_option("--eval", eval, "CAT items (JSONL)")->required();
    app.add_option("--out", out, "Report file (JSON)");
    app.add_option("--mode", mode, "Score definition prose|literal")
        ->check(CLI::IsMember({"prose", "literal"}));
    app.add_option("--gen-endpoint", gen_endpoint, "Remote continuation generator URL");
    app.add_option("--gen-timeout-ms", gen_timeout_ms, "Generator timeout")
        ->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "Seed, or 'random' (recorded only)");
    embed.add_to(app);
  }

  int run(const std::string& config_file, Streams io) {
    require_file(eval, "--eval");
    const auto items = load_cat_items(eval);
    std::optional<GenerationConfig> gen;
    if (!gen_endpoint.empty()) {
      gen = GenerationConfig{gen_endpoint, std::chrono::milliseconds(gen_timeout_ms)};
    }
    const ScoreMode sm = parse_score_mode(mode);
    const std::uint64_t s = resolve_seed(seed);
    EmbeddingCache cache = embed.open_cache();
    const CatEvaluation ev = evaluate_cat(items, gen, embed.config(), cache, sm);
    embed.save_cache(cache);

    json effective = {{"subcommand", "stereotype"},
                      {"config_file", config_file.empty() ? json(nullptr) : json(config_file)},
                      {"eval", eval},
                      {"mode", to_string(sm)},
                      {"gen_endpoint", gen_endpoint.empty() ? json(nullptr) : json(gen_endpoint)},
                      {"continuation_chars", kContinuationChars},
                      {"seed", s},
                      {"embed", embed.to_json()}};
    if (!out.empty()) {
      write_json(out, report::envelope(report::kSchemaStereotype, std::move(effective),
                                       report::to_json(ev)));
    }
    io.out << "score=" << (ev.score ? format_number(*ev.score) : std::string("null"))
           << " mode=" << to_string(sm) << " stereotypical=" << ev.counts.stereotypical
           << " anti_stereotypical=" << ev.counts.anti_stereotypical
           << " nonsensical=" << ev.counts.nonsensical << "\n";
    if (!ev.score) {
      io.err << "biaslens: stereotype score undefined (zero denominator in " << to_string(sm)
             << " mode)\n";
      return kExitDegenerate;
    }
    return kExitOk;
  }
};

// ---------------------------------------------------------------------------

// Token log-probabilities from a JSON array file, or from JSONL lines each
// carrying "token_logprobs" (concatenated in file order).
inline std::vector<double> load_logprobs(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::kIo, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string content = ss.str();
  try {
    const auto j = json::parse(content);
    if (j.is_array()) return j.get<std::vector<double>>();
    return j.at("token_logprobs").get<std::vector<double>>();
  } catch (const json::exception&) {
  }
  std::vector<double> all;
  std::istringstream lines(content);
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    try {
      const auto row = json::parse(line).at("token_logprobs").get<std::vector<double>>();
      all.insert(all.end(), row.begin(), row.end());
    } catch (const json::exception& ex) {
      fail(ErrorKind::kParse, path.string() + ":" + std::to_string(n) + ": " + ex.what());
    }
  }
  return all;
}

struct MbIndexCommand {
  std::optional<double> perplexity_value, score;
  std::string logprobs, score_endpoint, stereotype_report, reference, out;
  std::size_t dataset_size = 0;
  std::string seed = "42";

  void add_to(CLI::App& app) {
    auto* p = app.add_option("--perplexity", perplexity_value, "Perplexity value");
    auto* l = app.add_option("--logprobs", logprobs, "Token log-probabilities file");
    auto* e = app.add_option("--score-endpoint", score_endpoint,
                             "Remote scorer URL (scores every --reference entry)");
    p->excludes(l)->excludes(e);
    l->excludes(e);
    auto* s = app.add_option("--score", score, "Stereotype score");
    auto* r = app.add_option("--stereotype-report", stereotype_report,
                             "Report written by the stereotype subcommand");
    s->excludes(r);
    app.add_option("--dataset-size", dataset_size, "Fine-tuning dataset size |d|")->required();
    app.add_option("--reference", reference, "Reference corpus (JSONL) for identity/scoring");
    app.add_option("--out", out, "Report file (JSON)");
    app.add_option("--seed", seed, "Seed, or 'random' (recorded only)");
  }

  int run(const std::string& config_file, Streams io) {
    ModelBiasReport m;
    std::optional<Corpus> ref;
    if (!reference.empty()) {
      require_file(reference, "--reference");
      ref = load_corpus(reference);
      m.reference = ReferenceIdentity{ref->name, corpus_hash(*ref).hex, ref->size()};
    }

    if (perplexity_value) {
      m.perplexity = *perplexity_value;
    } else if (!logprobs.empty()) {
      require_file(logprobs, "--logprobs");
      const auto lp = load_logprobs(logprobs);
      m.perplexity = perplexity(lp);
      m.token_count = lp.size();
    } else if (!score_endpoint.empty()) {
      require(ref.has_value(), ErrorKind::kInvalidArgument,
              "--score-endpoint needs --reference");
      std::vector<double> lp;
      for (const auto& e : ref->entries) {
        try {
          const auto row = score_text(score_endpoint, e.text);
          lp.insert(lp.end(), row.begin(), row.end());
        } catch (const Error& ex) {
          fail(ex.kind(), "reference entry '" + e.id + "': " + ex.what());
        }
      }
      m.perplexity = perplexity(lp);
      m.token_count = lp.size();
    } else {
      fail(ErrorKind::kInvalidArgument,
           "one of --perplexity, --logprobs or --score-endpoint is required");
    }

    if (score) {
      m.stereotype_score = *score;
    } else if (!stereotype_report.empty()) {
      require_file(stereotype_report, "--stereotype-report");
      std::ifstream in(stereotype_report, std::ios::binary);
      json j;
      try {
        in >> j;
        const auto& payload = j.at("payload");
        require(j.at("schema").get<std::string>() == report::kSchemaStereotype, ErrorKind::kParse,
                stereotype_report + ": not a stereotype report");
        m.score_mode = parse_score_mode(payload.at("score_mode").get<std::string>());
        const auto& c = payload.at("counts");
        m.counts = CatCounts{c.at("stereotypical").get<std::size_t>(),
                             c.at("anti_stereotypical").get<std::size_t>(),
                             c.at("nonsensical").get<std::size_t>()};
        if (payload.at("stereotype_score").is_null()) {
          fail(ErrorKind::kDegenerate, stereotype_report + ": stereotype score is undefined");
        }
        m.stereotype_score = payload.at("stereotype_score").get<double>();
      } catch (const json::exception& ex) {
        fail(ErrorKind::kParse, stereotype_report + ": " + ex.what());
      }
    } else {
      fail(ErrorKind::kInvalidArgument, "one of --score or --stereotype-report is required");
    }

    m.dataset_size = dataset_size;
    m.mb_index = mb_index(m.perplexity, m.stereotype_score, m.dataset_size);

    json effective = {
        {"subcommand", "mb-index"},
        {"config_file", config_file.empty() ? json(nullptr) : json(config_file)},
        {"perplexity", perplexity_value ? json(*perplexity_value) : json(nullptr)},
        {"logprobs", logprobs.empty() ? json(nullptr) : json(logprobs)},
        {"score_endpoint", score_endpoint.empty() ? json(nullptr) : json(score_endpoint)},
        {"score", score ? json(*score) : json(nullptr)},
        {"stereotype_report", stereotype_report.empty() ? json(nullptr) : json(stereotype_report)},
        {"dataset_size", dataset_size},
        {"reference", reference.empty() ? json(nullptr) : json(reference)},
        {"seed", resolve_seed(seed)}};
    if (!out.empty()) {
      write_json(out, report::envelope(report::kSchemaMbIndex, std::move(effective),
                                       report::to_json(m)));
    }
    io.out << "mb=" << format_number(m.mb_index) << " perplexity=" << format_number(m.perplexity)
           << " score=" << format_number(m.stereotype_score) << " size=" << m.dataset_size
           << "\n";
    return kExitOk;
  }
};

// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Dataset and model bias auditing toolkit", "biaslens"};
  app.set_version_flag("--version", BIASLENS_VERSION);
  app.require_subcommand(1);
  std::string config_file;
  auto* cfg = app.set_config("--config", "", "TOML/INI file with per-subcommand defaults");
  cfg->envname("BIASLENS_CONFIG");

  DbIndexCommand db;
  AugmentCommand aug;
  StereotypeCommand st;
  MbIndexCommand mb;
  auto* db_app = app.add_subcommand("db-index", "Dataset bias index against an offender corpus");
  auto* aug_app = app.add_subcommand("augment", "Bias-producer augmentation of a corpus");
  auto* st_app = app.add_subcommand("stereotype", "Stereotype score from CAT continuations");
  auto* mb_app = app.add_subcommand("mb-index", "Model bias index");
  db.add_to(*db_app);
  aug.add_to(*aug_app);
  st.add_to(*st_app);
  mb.add_to(*mb_app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, er;
    const int code = app.exit(e, o, er);
    out << o.str();
    err << er.str();
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (cfg->count() > 0 || !cfg->empty()) config_file = cfg->as<std::string>();

  const Streams io{out, err};
  try {
    if (*db_app) return db.run(config_file, io);
    if (*aug_app) return aug.run(config_file, io);
    if (*st_app) return st.run(config_file, io);
    if (*mb_app) return mb.run(config_file, io);
  } catch (const Error& e) {
    err << "biaslens: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const nlohmann::json::exception& e) {
    err << "biaslens: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "biaslens: internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace biaslens::cli
