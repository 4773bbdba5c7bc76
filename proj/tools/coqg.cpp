// coqg: preprocess, train, generate, evaluate, analyze-flow, demo.

#include "coqg/coqg.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace coqg;

namespace {

constexpr int kExitNumeric = 3;

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path data_root() {
  const char* env = std::getenv("COQG_DATA_DIR");
  return env ? fs::path(env) : fs::path("data");
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, const std::string& out_help) {
  cmd->add_option("--config", c.config, "key = value config file");
  cmd->add_option("--seed", c.seed, "random seed (overrides config)");
  cmd->add_option("--out", c.out, out_help);
}

/// Config file entries, then explicit overrides on top.
std::map<std::string, std::string> load_config(const Common& c, const std::map<std::string, std::string>& overrides) {
  auto kv = c.config.empty() ? std::map<std::string, std::string>{} : util::load_key_values(c.config);
  for (const auto& [k, v] : overrides) kv[k] = v;
  if (c.seed) kv["seed"] = std::to_string(*c.seed);
  return kv;
}

std::string out_or(const Common& c, const fs::path& fallback) { return c.out.empty() ? fallback.string() : c.out; }

// preprocess ---------------------------------------------------------------

struct PreprocessArgs {
  Common common;
  std::string input;
  std::string coref_file;
};

int cmd_preprocess(const PreprocessArgs& a) {
  corpus::PreprocessOptions opt;
  for (const auto& [k, v] : load_config(a.common, {})) {
    if (k == "min_freq") opt.min_freq = util::to_int(k, v);
    else if (k == "history_turns") opt.build.history_turns = util::to_int(k, v);
    else if (k == "chunk_count" || k == "L") opt.build.chunk_count = util::to_int(k, v);
    else if (k == "seed") opt.seed = std::stoull(v);
    else throw util::ConfigError("unknown preprocess key '" + k + "'");
  }
  const std::string input = a.input.empty() ? (data_root() / "coqa-train-v1.0.json").string() : a.input;
  const auto convs = corpus::load_coqa(input);
  std::optional<corpus::FileCorefProvider> file_provider;
  if (!a.coref_file.empty()) file_provider = corpus::FileCorefProvider::from_jsonl(a.coref_file);
  const corpus::HeuristicCorefProvider heuristic;
  const corpus::CorefProvider& provider =
      file_provider ? static_cast<const corpus::CorefProvider&>(*file_provider) : heuristic;

  const auto data = corpus::preprocess(convs, opt, provider);
  const fs::path out = out_or(a.common, data_root() / "processed");
  corpus::write_preprocessed(data, out);
  const auto& r = data.report;
  std::cout << "conversations " << r.conversations << ", turns " << r.total_turns << ", filtered "
            << r.filtered_percent() << "%, examples " << r.examples << " (" << r.split_examples[0] << "/"
            << r.split_examples[1] << "/" << r.split_examples[2] << "), mean span F1 " << r.mean_span_f1
            << ", coref coverage " << r.coref_coverage() << ", vocabulary " << r.vocab_size << "\nwrote " << out.string()
            << '\n';
  return 0;
}

// train --------------------------------------------------------------------

struct TrainArgs {
  Common common;
  std::string data;
  std::optional<double> lambda[4];
  bool no_coref = false;
  bool no_flow = false;
  int max_examples = 0;
};

int cmd_train(const TrainArgs& a) {
  std::map<std::string, std::string> overrides;
  const char* names[4] = {"lambda1", "lambda2", "lambda3", "lambda4"};
  for (int k = 0; k < 4; ++k)
    if (a.lambda[k]) overrides[names[k]] = std::to_string(*a.lambda[k]);
  if (a.no_coref) overrides["lambda1"] = overrides["lambda2"] = "0";
  if (a.no_flow) overrides["lambda3"] = overrides["lambda4"] = "0";

  nnet::ModelConfig model_cfg;
  objectives::TrainConfig train_cfg;
  const auto kv = load_config(a.common, overrides);
  for (const auto& [k, v] : kv)
    if (!model_cfg.set(k, v) && !train_cfg.set(k, v)) throw util::ConfigError("unknown train key '" + k + "'");

  const fs::path data = a.data.empty() ? data_root() / "processed" : fs::path(a.data);
  const auto vocab = corpus::Vocabulary::load((data / "vocab.txt").string());
  model_cfg.vocab_size = vocab.size();
  model_cfg.validate();
  train_cfg.validate();

  auto load = [&](const char* name) {
    auto examples = corpus::read_examples((data / name).string());
    if (a.max_examples > 0 && static_cast<int>(examples.size()) > a.max_examples)
      examples.resize(static_cast<std::size_t>(a.max_examples));
    std::vector<nnet::EncodedExample> out;
    for (const auto& ex : examples) out.push_back(nnet::encode_example(ex, vocab));
    return out;
  };
  const auto train = load("train.jsonl");
  const auto validation = load("validation.jsonl");

  nnet::CfNet<float> model(model_cfg);
  const auto report = objectives::train(model, std::span<const nnet::EncodedExample>(train),
                                        std::span<const nnet::EncodedExample>(validation), train_cfg,
                                        [](const objectives::EpochRecord& r) {
                                          std::cout << "epoch " << r.epoch << "  nll " << r.nll << "  coref " << r.coref
                                                    << "  flow " << r.flow << "  val_nll " << r.val_nll << std::endl;
                                        });
  const fs::path out = out_or(a.common, "model");
  fs::create_directories(out);
  util::atomic_write(out / "training_log.csv", objectives::training_log_csv(report.log));
  if (report.status == objectives::TrainStatus::Diverged) throw NumericError("training diverged: " + report.message);
  nnet::save_checkpoint((out / "model.ckpt").string(), model, vocab);
  util::atomic_write(out / "vocab.txt", util::read_file(data / "vocab.txt"));
  util::atomic_write(out / "config.json", nlohmann::json(model_cfg).dump(2) + "\n");
  std::cout << "best epoch " << report.best_epoch << " (val_nll " << report.best_val_nll << "), wrote " << out.string()
            << '\n';
  return 0;
}

// generate -----------------------------------------------------------------

struct Loaded {
  corpus::Vocabulary vocab;
  nnet::CfNet<float> model;
};

Loaded load_model(const std::string& dir) {
  auto vocab = corpus::Vocabulary::load((fs::path(dir) / "vocab.txt").string());
  auto model = nnet::load_checkpoint<float>((fs::path(dir) / "model.ckpt").string(), vocab);
  return {std::move(vocab), std::move(model)};
}

struct GenerateArgs {
  Common common;
  std::string model = "model";
  std::string data;
  int beam = 5;
  int max_len = 15;
  bool no_block = false;
  bool trace = false;
};

nlohmann::json trace_json(const decode::GenerationResult& r) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& t : r.trace) steps.push_back({{"alpha", t.alpha}, {"beta", t.beta}, {"p_gen", t.p_gen}});
  return steps;
}

int cmd_generate(const GenerateArgs& a) {
  auto [vocab, model] = load_model(a.model);
  const std::string data = a.data.empty() ? (data_root() / "processed" / "test.jsonl").string() : a.data;
  const auto examples = corpus::read_examples(data);
  const decode::BeamOptions opt{a.beam, a.max_len, !a.no_block};
  std::string out;
  for (const auto& ex : examples) {
    const auto enc = nnet::encode_example(ex, vocab);
    const auto r = decode::beam_search(model, enc, vocab, opt);
    if (!std::isfinite(r.score)) throw NumericError("non-finite score for " + ex.conversation_id);
    nlohmann::json j{{"conversation_id", ex.conversation_id},
                     {"turn_number", ex.turn_number},
                     {"question", r.tokens},
                     {"log_prob", r.log_prob},
                     {"score", r.score},
                     {"finished", r.finished}};
    if (a.trace) j["trace"] = trace_json(r);
    out += j.dump() + '\n';
  }
  const std::string path = out_or(a.common, "generations.jsonl");
  util::atomic_write(path, out);
  std::cout << "wrote " << examples.size() << " generations to " << path << '\n';
  return 0;
}

// evaluate -----------------------------------------------------------------

struct EvaluateArgs {
  Common common;
  std::string generations;
  std::string gold;
};

int cmd_evaluate(const EvaluateArgs& a) {
  const auto gold = corpus::read_examples(a.gold);
  std::vector<nlohmann::json> gens;
  {
    std::istringstream in(util::read_file(a.generations));
    for (std::string line; std::getline(in, line);)
      if (!line.empty()) gens.push_back(nlohmann::json::parse(line));
  }
  if (gens.size() != gold.size())
    throw std::runtime_error("evaluate: " + std::to_string(gens.size()) + " generations for " +
                             std::to_string(gold.size()) + " gold examples");

  std::vector<metrics::Sentence> cands, refs;
  std::vector<std::vector<std::vector<double>>> traces;
  std::vector<std::vector<corpus::Evidence>> evidence;
  bool have_traces = true;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto& g = gens[i];
    if (g.at("conversation_id") != gold[i].conversation_id || g.at("turn_number") != gold[i].turn_number)
      throw std::runtime_error("evaluate: generation " + std::to_string(i) + " does not line up with gold");
    cands.push_back(g.at("question").get<metrics::Sentence>());
    refs.push_back(gold[i].target_question);
    if (!g.contains("trace")) {
      have_traces = false;
      continue;
    }
    std::vector<std::vector<double>> alphas;
    for (const auto& s : g["trace"]) alphas.push_back(s.at("alpha").get<std::vector<double>>());
    traces.push_back(std::move(alphas));
    evidence.push_back(gold[i].token_evidence());
  }

  metrics::EvalReport report;
  report.all = metrics::ngram_scores(cands, refs);
  const auto subset = metrics::coreference_subset(std::span<const corpus::ProcessedExample>(gold));
  std::vector<metrics::Sentence> sc, sr;
  for (const auto i : subset) sc.push_back(cands[i]), sr.push_back(refs[i]);
  report.coref_subset = metrics::ngram_scores(sc, sr);
  report.pronouns = metrics::pronoun_prf(sc, sr);
  if (have_traces) report.attention = metrics::attention_mass(traces, evidence);

  std::cout << metrics::format_table(report);
  const std::string path = out_or(a.common, "eval_report.json");
  util::atomic_write(path, metrics::to_json(report).dump(2) + "\n");
  if (report.any_nan()) throw NumericError("evaluation produced NaN");
  std::cout << "coreference subset " << subset.size() << " of " << gold.size() << ", wrote " << path << '\n';
  return 0;
}

// analyze-flow -------------------------------------------------------------

struct FlowArgs {
  Common common;
  std::string input;
  int chunks = 10;
};

int cmd_analyze_flow(const FlowArgs& a) {
  const std::string input = a.input.empty() ? (data_root() / "coqa-dev-v1.0.json").string() : a.input;
  const auto convs = corpus::load_coqa(input);
  const auto h = analysis::flow_heatmap(convs, a.chunks);
  const auto s = analysis::summarize(h);
  const fs::path out = out_or(a.common, "flow");
  fs::create_directories(out);
  util::atomic_write(out / "heatmap.csv", analysis::heatmap_csv(h));
  util::atomic_write(out / "flow_summary.json", analysis::to_json(s, h).dump(2) + "\n");
  std::cout << "Spearman " << s.spearman << ", non-decreasing " << s.non_decreasing_pairs << "/" << s.compared_pairs
            << ", wrote " << out.string() << '\n';
  return 0;
}

// demo ---------------------------------------------------------------------

struct DemoArgs {
  Common common;
  std::string model = "model";
  int beam = 5;
};

int cmd_demo(const DemoArgs& a) {
  auto [vocab, model] = load_model(a.model);
  const corpus::Tokenizer tok;
  std::cout << "Paste a passage, then an empty line.\n";
  corpus::RawConversation conv;
  conv.id = "demo";
  for (std::string line; std::getline(std::cin, line) && !line.empty();) conv.passage += (conv.passage.empty() ? "" : " ") + line;
  const auto tokens = tok.tokenize(conv.passage);
  if (tokens.empty()) {
    std::cerr << "empty passage\n";
    return 1;
  }
  for (std::size_t k = 0; k < tokens.size(); ++k) std::cout << k << ':' << tokens[k].text << (k + 1 < tokens.size() ? ' ' : '\n');

  const int last = static_cast<int>(tokens.size()) - 1;
  while (true) {
    std::cout << "answer span as 'first last' (0-" << last << "), or quit> " << std::flush;
    std::string line;
    if (!std::getline(std::cin, line) || line == "quit" || line == "q") break;
    std::istringstream in(line);
    int first = -1, end = -1;
    if (!(in >> first >> end) || first < 0 || end < first || end > last) {
      std::cout << "span must be two indices with 0 <= first <= last <= " << last << '\n';
      continue;
    }
    corpus::RawTurn turn;
    turn.turn_id = static_cast<int>(conv.turns.size()) + 1;
    turn.rationale = corpus::CharSpan{static_cast<long>(tokens[static_cast<std::size_t>(first)].begin),
                                      static_cast<long>(tokens[static_cast<std::size_t>(end)].end)};
    turn.answer = conv.passage.substr(static_cast<std::size_t>(turn.rationale.begin),
                                      static_cast<std::size_t>(turn.rationale.end - turn.rationale.begin));
    if (corpus::is_uninformative_answer(turn.answer)) {
      std::cout << "that span reads as a yes/no/unknown answer; pick another\n";
      continue;
    }
    conv.turns.push_back(turn);
    auto examples = corpus::build_examples(conv, {.history_turns = 3, .chunk_count = model.config().chunk_count});
    const auto r = decode::beam_search(model, nnet::encode_example(examples.back(), vocab), vocab, {.beam_size = a.beam});
    conv.turns.back().question = r.text();
    std::cout << "Q" << turn.turn_id << ": " << r.text() << "   (A: " << turn.answer << ")\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conversational question generation"};
  app.require_subcommand(1);

  PreprocessArgs pre;
  auto* p = app.add_subcommand("preprocess", "CoQA JSON to example splits, vocabulary and report");
  add_common(p, pre.common, "output directory (default $COQG_DATA_DIR/processed)");
  p->add_option("--input", pre.input, "CoQA JSON (default $COQG_DATA_DIR/coqa-train-v1.0.json)");
  p->add_option("--coref-file", pre.coref_file, "JSONL coreference annotations (default: built-in heuristic)");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "train a model on preprocessed data");
  add_common(t, tr.common, "model directory (default model)");
  t->add_option("--data", tr.data, "preprocessed directory (default $COQG_DATA_DIR/processed)");
  t->add_option("--lambda1", tr.lambda[0], "coref attention weight");
  t->add_option("--lambda2", tr.lambda[1], "coref output weight");
  t->add_option("--lambda3", tr.lambda[2], "flow CES weight");
  t->add_option("--lambda4", tr.lambda[3], "flow HES weight");
  t->add_flag("--no-coref", tr.no_coref, "zero lambda1 and lambda2");
  t->add_flag("--no-flow", tr.no_flow, "zero lambda3 and lambda4");
  t->add_option("--max-examples", tr.max_examples, "use at most this many training/validation examples");

  GenerateArgs ge;
  auto* g = app.add_subcommand("generate", "beam search over preprocessed examples");
  add_common(g, ge.common, "generations JSONL (default generations.jsonl)");
  g->add_option("--model", ge.model, "model directory");
  g->add_option("--data", ge.data, "examples JSONL (default $COQG_DATA_DIR/processed/test.jsonl)");
  g->add_option("--beam", ge.beam, "beam size")->check(CLI::PositiveNumber);
  g->add_option("--max-len", ge.max_len, "maximum question length")->check(CLI::PositiveNumber);
  g->add_flag("--no-block", ge.no_block, "allow repeated tokens");
  g->add_flag("--trace", ge.trace, "include attention traces");

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "score generations against gold questions");
  add_common(e, ev.common, "report JSON (default eval_report.json)");
  e->add_option("--generations", ev.generations, "generations JSONL")->required();
  e->add_option("--gold", ev.gold, "gold examples JSONL")->required();

  FlowArgs fl;
  auto* f = app.add_subcommand("analyze-flow", "turn-chunk by passage-chunk rationale heatmap");
  add_common(f, fl.common, "output directory (default flow)");
  f->add_option("--input", fl.input, "CoQA JSON (default $COQG_DATA_DIR/coqa-dev-v1.0.json)");
  f->add_option("--chunks", fl.chunks, "chunks per axis")->check(CLI::PositiveNumber);

  DemoArgs de;
  auto* d = app.add_subcommand("demo", "interactive question generation on a pasted passage");
  add_common(d, de.common, "unused");
  d->add_option("--model", de.model, "model directory");
  d->add_option("--beam", de.beam, "beam size")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*p) return cmd_preprocess(pre);
    if (*t) return cmd_train(tr);
    if (*g) return cmd_generate(ge);
    if (*e) return cmd_evaluate(ev);
    if (*f) return cmd_analyze_flow(fl);
    if (*d) return cmd_demo(de);
  } catch (const NumericError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
  return 0;
}
