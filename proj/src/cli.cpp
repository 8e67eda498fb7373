#include "prolink/cli.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include "prolink/calibrator.hpp"
#include "prolink/errors.hpp"
#include "prolink/eval.hpp"
#include "prolink/llm.hpp"
#include "prolink/prompter.hpp"
#include "prolink/reasoner.hpp"
#include "prolink/relation_graph.hpp"
#include "prolink/tasks.hpp"
#include "prolink/training.hpp"

namespace prolink::cli {

namespace fs = std::filesystem;

namespace {

// Thrown for missing or inconsistent command-line input.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Settings {
  // [paths]
  std::string kg, train_kg, descriptions, examples, type_oracle, out_dir = ".";
  std::string dataset;
  // [model] / [training]
  ModelConfig model;
  TrainingConfig training;
  std::string entity_init = "query_relation";
  // [tasks]
  std::size_t k = 1;
  std::size_t variants = 3;
  std::uint64_t task_seed = 0;
  std::vector<std::string> relations;
  // [prompt]
  PromptConfig prompt;
  std::string info_form = "des";
  std::string type_mode = "fixed";
  std::string backend = "mock";
  HttpBackendConfig http;
  std::size_t concurrency = 4;
  // [calibration]
  std::string beta = "1";
  bool self_loops = true;
};

std::string unquote(std::string v) {
  auto trim = [](std::string& s) {
    auto b = s.find_first_not_of(" \t");
    auto e = s.find_last_not_of(" \t");
    s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
  };
  trim(v);
  if (!v.empty() && (v.front() == '"' || v.front() == '\'')) {
    auto close = v.find(v.front(), 1);
    if (close != std::string::npos) return v.substr(1, close - 1);
  }
  if (auto hash = v.find(" #"); hash != std::string::npos) {  // trailing comment
    v.resize(hash);
    trim(v);
  }
  return v;
}

std::vector<std::string> list_value(std::string v) {
  v = unquote(v);
  if (!v.empty() && v.front() == '[' && v.back() == ']') v = v.substr(1, v.size() - 2);
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = unquote(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// TOML-style file: [section] headers and key = value lines.
void load_config(const std::string& path, Settings& s) {
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::ini_parser::read_ini(path, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw DataError("config " + path + ": " + e.what());
  }
  auto str = [&](const char* key, std::string& dst) {
    if (auto v = pt.get_optional<std::string>(key)) dst = unquote(*v);
  };
  auto num = [&](const char* key, auto& dst) {
    if (auto v = pt.get_optional<std::string>(key)) {
      using T = std::remove_reference_t<decltype(dst)>;
      try {
        if constexpr (std::is_floating_point_v<T>) dst = std::stod(unquote(*v));
        else dst = static_cast<T>(std::stoull(unquote(*v)));
      } catch (const std::exception&) {
        throw DataError("config " + path + ": " + key + " is not a number");
      }
    }
  };
  auto flag = [&](const char* key, bool& dst) {
    if (auto v = pt.get_optional<std::string>(key)) dst = unquote(*v) == "true";
  };

  str("paths.kg", s.kg);
  str("paths.train_kg", s.train_kg);
  str("paths.descriptions", s.descriptions);
  str("paths.examples", s.examples);
  str("paths.type_oracle", s.type_oracle);
  str("paths.out_dir", s.out_dir);
  str("paths.dataset", s.dataset);

  num("model.dim", s.model.dim);
  num("model.layers_r", s.model.layers_r);
  num("model.layers_e", s.model.layers_e);
  str("model.entity_init", s.entity_init);

  num("training.alpha", s.training.alpha);
  num("training.gamma", s.training.gamma);
  num("training.negatives", s.training.negatives);
  num("training.lr", s.training.lr);
  num("training.epochs", s.training.epochs);
  num("training.batch_size", s.training.batch_size);
  num("training.batches_per_epoch", s.training.batches_per_epoch);
  num("training.seed", s.training.seed);

  num("tasks.k", s.k);
  num("tasks.variants", s.variants);
  num("tasks.seed", s.task_seed);
  if (auto v = pt.get_optional<std::string>("tasks.relations")) s.relations = list_value(*v);

  str("prompt.info_form", s.info_form);
  str("prompt.type_mode", s.type_mode);
  if (auto v = pt.get_optional<std::string>("prompt.candidate_types"))
    s.prompt.candidate_types = list_value(*v);
  num("prompt.relations_per_request", s.prompt.relations_per_request);
  str("prompt.backend", s.backend);
  str("prompt.base_url", s.http.base_url);
  str("prompt.path", s.http.path);
  str("prompt.model", s.http.model);
  num("prompt.concurrency", s.concurrency);

  str("calibration.beta", s.beta);
  flag("calibration.self_loops", s.self_loops);
}

void finalize(Settings& s) {
  if (s.entity_init == "query_relation") s.model.entity_init = EntityInit::kQueryRelation;
  else if (s.entity_init == "all_ones") s.model.entity_init = EntityInit::kAllOnes;
  else throw UsageError("entity_init must be query_relation or all_ones");
  s.prompt.info_form = parse_info_form(s.info_form);
  s.prompt.type_mode = parse_type_mode(s.type_mode);
  if (s.prompt.type_mode != TypeMode::kFree && s.prompt.candidate_types.empty())
    s.prompt.candidate_types = {"person", "location", "organization", "creative work", "event",
                                "time", "genre/type", "profession", "animal", "language"};
  s.model.validate();
  s.training.validate();
  s.prompt.validate();
  (void)parse_beta_mode(s.beta);
}

void require(const std::string& value, const char* what) {
  if (value.empty()) throw UsageError(std::string("missing required input: ") + what);
  if (!fs::exists(value)) throw UsageError(std::string(what) + " not found: " + value);
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + p.string());
  return out;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot read " + p.string());
  return in;
}

KnowledgeGraph load_base(const std::string& path) {
  auto parsed = load_triples(path);
  if (parsed.duplicates) spdlog::info("{}: {} duplicate triples collapsed", path, parsed.duplicates);
  return std::move(parsed.graph);
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---- stages ---------------------------------------------------------------

void stage_build_rg(const Settings& s, const std::string& out_path) {
  require(s.kg, "--kg");
  auto kg = augment_kg(load_base(s.kg));
  RelationGraphOptions opts;
  opts.self_loops = s.self_loops;
  auto rg = build_relation_graph(kg, opts);
  auto out = open_out(out_path);
  write_relation_graph(out, rg, kg.relations());
  spdlog::info("relation graph: {} nodes, {} edges -> {}", rg.node_count(), rg.num_edges(), out_path);
}

std::vector<KShotTask> sample_tasks(const Settings& s, const KnowledgeGraph& full) {
  std::vector<RelationId> rels;
  if (s.relations.empty()) {
    rels = eligible_relations(full, s.k);
  } else {
    for (const auto& name : s.relations) {
      auto id = full.relations().find(name);
      if (!id) throw VocabularyError("unknown task relation '" + name + "'");
      rels.push_back(*id);
    }
  }
  if (rels.empty()) throw TaskError("no relation has more than k = " + std::to_string(s.k) + " triples");
  std::vector<KShotTask> tasks;
  for (RelationId r : rels)
    for (auto& t : make_variants(full, r, s.k, s.variants, s.task_seed)) tasks.push_back(std::move(t));
  return tasks;
}

void stage_sample_tasks(const Settings& s, const fs::path& out_path) {
  require(s.kg, "--kg");
  auto full = load_base(s.kg);
  auto tasks = sample_tasks(s, full);
  auto out = open_out(out_path);
  write_task_manifest(out, full, tasks);
  spdlog::info("{} tasks -> {}", tasks.size(), out_path.string());
}

void stage_pretrain(const Settings& s, const KnowledgeGraph& train_kg, const fs::path& prefix) {
  auto params = ModelParams::init(s.model, s.training.seed);
  spdlog::info("pretraining on {} triples, {} parameters", train_kg.num_triples(), params.parameter_count());
  if (prefix.has_parent_path()) fs::create_directories(prefix.parent_path());
  auto log = open_out(prefix.string() + ".log");
  log << "epoch\tmean_loss\tseconds\n";
  auto result = train(train_kg, params, s.training, [&](const EpochStats& st, const ModelParams&) {
    log << st.epoch << '\t' << fmt17(st.mean_loss) << '\t' << st.seconds << '\n';
    log.flush();
    spdlog::info("epoch {} loss {:.6f} ({:.2f}s)", st.epoch, st.mean_loss, st.seconds);
  });
  auto curve = open_out(prefix.string() + ".loss.tsv");
  curve << "epoch\tmean_loss\n";
  for (std::size_t i = 0; i < result.loss_curve.size(); ++i)
    curve << i << '\t' << fmt17(result.loss_curve[i]) << '\n';
  save_checkpoint(prefix.string(), result.params.to_checkpoint());
}

std::unique_ptr<LlmBackend> make_backend(const Settings& s, const KnowledgeGraph& kg) {
  if (s.backend == "mock") {
    require(s.type_oracle, "--type-oracle (mock backend)");
    auto in = open_in(s.type_oracle);
    std::vector<std::string> names;
    for (RelationId r = 0; r < kg.base_relation_count(); ++r) names.push_back(kg.relations().name(r));
    return std::make_unique<MockBackend>(read_type_table(in), std::move(names));
  }
  if (s.backend == "http") {
    if (s.http.base_url.empty()) throw UsageError("http backend needs --llm-url");
    return std::make_unique<HttpBackend>(s.http);
  }
  throw UsageError("unknown LLM backend '" + s.backend + "' (mock, http)");
}

void stage_prompt(const Settings& s, const fs::path& dir) {
  require(s.kg, "--kg");
  auto kg = load_base(s.kg);
  std::map<std::string, std::string> desc;
  std::map<std::string, RelationExample> ex;
  if (!s.descriptions.empty()) {
    auto in = open_in(s.descriptions);
    desc = parse_relation_descriptions(in);
  }
  if (!s.examples.empty()) {
    auto in = open_in(s.examples);
    ex = parse_relation_examples(in);
  }
  // Relation names stand in for missing descriptions.
  auto infos = make_relation_infos(kg, &desc, &ex, true);
  auto backend = make_backend(s, kg);
  fs::create_directories(dir);
  CachedBackend cached(*backend, (dir / "llm_cache.json").string());
  auto outcome = run_prompting(s.prompt, infos, kg.base_relation_count(), cached, s.concurrency);

  auto types = open_out(dir / "types.tsv");
  write_type_table(types, outcome.assignment, kg.relations());
  RelationGraphOptions opts;
  opts.self_loops = s.self_loops;
  auto pg = build_prompt_graph(outcome.assignment, opts);
  auto aug = augment_kg(kg);
  auto pg_out = open_out(dir / "prompt_graph.tsv");
  write_relation_graph(pg_out, pg, aug.relations());
  auto warn = open_out(dir / "warnings.txt");
  for (const auto& w : outcome.warnings) warn << w << '\n';
  spdlog::info("prompting: {} requests ({} cached), {} prompt-graph edges", outcome.requests,
               cached.hits(), pg.num_edges());
}

void stage_calibrate(const Settings& s, const fs::path& tasks_path, const fs::path& prompt_dir,
                     const fs::path& out_dir) {
  require(s.kg, "--kg");
  require(tasks_path.string(), "--tasks");
  require((prompt_dir / "types.tsv").string(), "prompt types (types.tsv)");
  auto full = load_base(s.kg);
  auto in = open_in(tasks_path);
  auto tasks = read_task_manifest(in, full);
  auto tin = open_in(prompt_dir / "types.tsv");
  auto assignment = assignment_from_table(read_type_table(tin), full.relations(), full.base_relation_count());

  CalibrationConfig cfg;
  cfg.beta = parse_beta_mode(s.beta);
  cfg.graph.self_loops = s.self_loops;
  auto pg = build_prompt_graph(assignment, cfg.graph);
  fs::create_directories(out_dir);
  auto index = open_out(out_dir / "index.tsv");
  index << "task\trelation\tseed\tgraph\n";
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto& t = tasks[i];
    auto rg = build_relation_graph(t.inference_kg, cfg.graph);
    auto res = calibrate(t.query_relation, rg, pg, assignment, cfg);
    char stem[32];
    std::snprintf(stem, sizeof stem, "task_%04zu", i);
    auto g = open_out(out_dir / (std::string(stem) + ".rg.tsv"));
    write_relation_graph(g, res.graph, t.inference_kg.relations());
    auto r = open_out(out_dir / (std::string(stem) + ".report.tsv"));
    write_calibration_report(r, res.report, t.inference_kg.relations());
    index << i << '\t' << full.relations().name(t.query_relation) << '\t' << t.seed << '\t' << stem
          << ".rg.tsv\n";
    spdlog::debug("task {}: {} edges injected", i, res.report.injected.size());
  }
  spdlog::info("calibrated {} tasks -> {}", tasks.size(), out_dir.string());
}

void stage_evaluate(const Settings& s, const fs::path& tasks_path, const fs::path& ckpt,
                    const fs::path& calibrated_dir, const fs::path& out_path) {
  require(s.kg, "--kg");
  require(tasks_path.string(), "--tasks");
  require(ckpt.string() + ".bin", "--checkpoint");
  auto full = load_base(s.kg);
  auto in = open_in(tasks_path);
  auto tasks = read_task_manifest(in, full);
  auto params = ModelParams::from_checkpoint(load_checkpoint(ckpt.string()));

  std::vector<std::optional<RelationGraph>> graphs(tasks.size());
  const bool prompted = !calibrated_dir.empty() && fs::exists(calibrated_dir / "index.tsv");
  if (prompted) {
    auto idx = open_in(calibrated_dir / "index.tsv");
    std::string line;
    std::getline(idx, line);
    while (std::getline(idx, line)) {
      auto f = split_tabs(line);
      if (f.size() != 4) throw DataError("malformed calibrated index line: " + line);
      const std::size_t i = std::stoul(std::string(f[0]));
      if (i >= tasks.size()) throw DataError("calibrated index names task " + std::string(f[0]) + " not in the manifest");
      auto g = open_in(calibrated_dir / std::string(f[3]));
      graphs[i] = read_relation_graph(g, tasks[i].inference_kg.relations(),
                                      tasks[i].inference_kg.relation_node_count());
    }
    spdlog::info("evaluating with calibrated relation graphs from {}", calibrated_dir.string());
  } else {
    spdlog::info("no prompt artifacts: evaluating without prompt graphs");
  }

  AnswerIndex known(full);
  std::vector<ResultRow> rows(tasks.size());
  const std::string dataset = s.dataset.empty() ? fs::path(s.kg).stem().string() : s.dataset;
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(tasks.size());
  auto work = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        const auto& t = tasks[i];
        rows[i] = {dataset, full.relations().name(t.query_relation), t.k, std::to_string(t.seed),
                   evaluate(params, t, known, graphs[i] ? &*graphs[i] : nullptr)};
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  {
    const std::size_t n = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 8);
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < std::min(n, tasks.size()); ++w) pool.emplace_back(work);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  auto out = open_out(out_path);
  write_results(out, rows);
  spdlog::info("results for {} tasks -> {}", tasks.size(), out_path.string());
}

KnowledgeGraph default_train_kg(const Settings& s, const KnowledgeGraph& full,
                                const std::vector<KShotTask>& tasks) {
  if (!s.train_kg.empty()) return load_base(s.train_kg);
  // Without a separate training graph, hold out every task's query triples.
  std::vector<Triple> held;
  for (const auto& t : tasks) held.insert(held.end(), t.held_out.begin(), t.held_out.end());
  std::sort(held.begin(), held.end());
  std::vector<Triple> kept;
  for (const auto& t : full.triples())
    if (!std::binary_search(held.begin(), held.end(), t)) kept.push_back(t);
  return full.with_base_triples(std::move(kept));
}

// ---- command line -----------------------------------------------------------

std::string preload_config(const std::vector<std::string>& args) {
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return {};
}

int dispatch(const std::vector<std::string>& args) {
  Settings s;
  const std::string config_path = preload_config(args);
  if (!config_path.empty()) {
    if (!fs::exists(config_path)) throw UsageError("config file not found: " + config_path);
    load_config(config_path, s);
  }

  CLI::App app{"Few-shot inductive link prediction with LLM-prompted relation graphs", "prolink"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  std::string config_unused;
  bool verbose = false, quiet = false;
  app.add_option("--config", config_unused, "TOML-style config file");
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  app.add_flag("-q,--quiet", quiet, "Warnings and errors only");

  auto add_kg = [&](CLI::App* c) { c->add_option("--kg", s.kg, "Triples file (head<TAB>relation<TAB>tail)"); };
  auto add_model = [&](CLI::App* c) {
    c->add_option("--dim", s.model.dim);
    c->add_option("--layers-r", s.model.layers_r);
    c->add_option("--layers-e", s.model.layers_e);
    c->add_option("--entity-init", s.entity_init, "query_relation or all_ones");
  };
  auto add_training = [&](CLI::App* c) {
    c->add_option("--alpha", s.training.alpha);
    c->add_option("--gamma", s.training.gamma);
    c->add_option("--negatives", s.training.negatives);
    c->add_option("--lr", s.training.lr);
    c->add_option("--epochs", s.training.epochs);
    c->add_option("--batch-size", s.training.batch_size);
    c->add_option("--batches-per-epoch", s.training.batches_per_epoch);
  };
  auto add_tasks = [&](CLI::App* c) {
    c->add_option("--k", s.k, "Support triples per task");
    c->add_option("--variants", s.variants, "Task variants per relation");
    c->add_option("--relations", s.relations, "Query relations (default: all eligible)")->delimiter(',');
  };
  auto add_prompt = [&](CLI::App* c) {
    c->add_option("--llm-backend", s.backend, "mock or http");
    c->add_option("--type-oracle", s.type_oracle, "Type table answered by the mock backend");
    c->add_option("--llm-url", s.http.base_url);
    c->add_option("--llm-model", s.http.model);
    c->add_option("--info-form", s.info_form, "des, exp or d&e");
    c->add_option("--type-mode", s.type_mode, "fixed, refer or free");
    c->add_option("--candidate-types", s.prompt.candidate_types, "Candidate entity types")->delimiter(',');
    c->add_option("--descriptions", s.descriptions, "relation<TAB>description file");
    c->add_option("--examples", s.examples, "relation<TAB>head<TAB>tail file");
    c->add_option("--relations-per-request", s.prompt.relations_per_request);
  };
  std::uint64_t seed = 0;
  auto add_seed = [&](CLI::App* c) { return c->add_option("--seed", seed, "Seed for sampling, init and training"); };

  std::string out, tasks_path, ckpt, prompt_dir, calibrated_dir;

  auto* build_rg = app.add_subcommand("build-rg", "Relation graph of a KG");
  add_kg(build_rg);
  build_rg->add_option("--out", out, "Output TSV")->required();
  build_rg->add_flag("!--no-self-loops", s.self_loops, "Drop self-loop edges");

  auto* sample = app.add_subcommand("sample-tasks", "Sample K-shot tasks");
  add_kg(sample);
  add_tasks(sample);
  auto* sample_seed = add_seed(sample);
  sample->add_option("--out", out, "Task manifest")->required();

  auto* pretrain = app.add_subcommand("pretrain", "Train the reasoner");
  add_kg(pretrain);
  add_model(pretrain);
  add_training(pretrain);
  auto* pretrain_seed = add_seed(pretrain);
  pretrain->add_option("--out", out, "Checkpoint prefix")->required();

  auto* prompt = app.add_subcommand("prompt", "Query the LLM for relation entity types");
  add_kg(prompt);
  add_prompt(prompt);
  prompt->add_option("--out-dir", out, "Prompt artifact directory")->required();

  auto* calib = app.add_subcommand("calibrate", "Calibrate task relation graphs with the prompt graph");
  add_kg(calib);
  calib->add_option("--tasks", tasks_path)->required();
  calib->add_option("--prompt-dir", prompt_dir)->required();
  calib->add_option("--beta", s.beta, "1, 3, 5, mean or max");
  calib->add_option("--out-dir", out)->required();

  auto* eval = app.add_subcommand("evaluate", "Rank held-out answers of every task");
  add_kg(eval);
  eval->add_option("--tasks", tasks_path)->required();
  eval->add_option("--checkpoint", ckpt, "Checkpoint prefix")->required();
  eval->add_option("--calibrated-dir", calibrated_dir, "Calibrated graphs (omit for no prompt)");
  eval->add_option("--dataset", s.dataset);
  eval->add_option("--out", out, "Results TSV")->required();

  auto* pipeline = app.add_subcommand("pipeline", "All stages in order");
  add_kg(pipeline);
  pipeline->add_option("--train-kg", s.train_kg, "Pretraining graph (default: KG minus task queries)");
  add_model(pipeline);
  add_training(pipeline);
  add_tasks(pipeline);
  add_prompt(pipeline);
  pipeline->add_option("--beta", s.beta);
  pipeline->add_option("--dataset", s.dataset);
  pipeline->add_flag("--no-prompt", "Skip prompting and calibration");
  auto* pipeline_seed = add_seed(pipeline);
  pipeline->add_option("--out-dir", out)->required();

  std::vector<std::string> rest(args.begin() + 1, args.end());
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      std::cout << app.help();
      return kOk;
    }
    std::cerr << "prolink: " << e.what() << "\n" << "Run with --help for usage.\n";
    return kUsage;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : quiet ? spdlog::level::warn : spdlog::level::info);

  for (auto* opt : {sample_seed, pretrain_seed, pipeline_seed})
    if (opt->count()) {
      s.task_seed = seed;
      s.training.seed = seed;
    }
  finalize(s);

  if (*build_rg) {
    stage_build_rg(s, out);
  } else if (*sample) {
    stage_sample_tasks(s, out);
  } else if (*pretrain) {
    require(s.kg, "--kg");
    stage_pretrain(s, load_base(s.kg), out);
  } else if (*prompt) {
    stage_prompt(s, out);
  } else if (*calib) {
    stage_calibrate(s, tasks_path, prompt_dir, out);
  } else if (*eval) {
    stage_evaluate(s, tasks_path, ckpt, calibrated_dir, out);
  } else if (*pipeline) {
    const fs::path dir = out;
    require(s.kg, "--kg");
    fs::create_directories(dir);
    stage_sample_tasks(s, dir / "tasks.manifest");
    auto full = load_base(s.kg);
    auto min = open_in(dir / "tasks.manifest");
    auto tasks = read_task_manifest(min, full);
    stage_pretrain(s, default_train_kg(s, full, tasks), dir / "model");
    const bool use_prompt = pipeline->count("--no-prompt") == 0;
    if (use_prompt) {
      stage_prompt(s, dir / "prompt");
      stage_calibrate(s, dir / "tasks.manifest", dir / "prompt", dir / "calibrated");
    }
    stage_evaluate(s, dir / "tasks.manifest", dir / "model", use_prompt ? dir / "calibrated" : fs::path{},
                   dir / "results.tsv");
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  try {
    return dispatch(args);
  } catch (const UsageError& e) {
    spdlog::error("{}", e.what());
    return kUsage;
  } catch (const ContractError& e) {
    spdlog::error("invalid configuration: {}", e.what());
    return kUsage;
  } catch (const DataError& e) {
    spdlog::error("data error: {}", e.what());
    return kData;
  } catch (const BackendError& e) {
    spdlog::error("LLM backend error: {}", e.what());
    return kBackend;
  } catch (const NumericError& e) {
    spdlog::error("numeric error: {}", e.what());
    return kNumeric;
  } catch (const fs::filesystem_error& e) {
    spdlog::error("filesystem error: {}", e.what());
    return kData;
  } catch (const std::exception& e) {
    spdlog::error("unexpected error: {}", e.what());
    return 1;
  }
}

int run(int argc, const char* const* argv) {
  return run(std::vector<std::string>(argv, argv + argc));
}

}  // namespace prolink::cli
