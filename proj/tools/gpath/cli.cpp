#include "gpath/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <set>

#include "CLI11.hpp"
#include "gpath/analyze.hpp"
#include "gpath/config.hpp"
#include "gpath/corpus.hpp"
#include "gpath/error.hpp"
#include "gpath/metrics.hpp"
#include "gpath/report.hpp"
#include "gpath/trace_dump.hpp"

namespace gpath::cli {
namespace {

namespace fs = std::filesystem;

#ifndef GPATH_DEFAULT_DATA_DIR
#define GPATH_DEFAULT_DATA_DIR "data"
#endif

fs::path data_dir() {
  if (const char* env = std::getenv("GPATH_DATA_DIR")) return env;
  return GPATH_DEFAULT_DATA_DIR;
}

// Command-line values that override the config file.
struct Overrides {
  std::string config;
  std::map<std::string, std::string> values;
  bool no_plots = false;

  void bind(CLI::App* app, bool model_options) {
    app->add_option("--config", config, "run config file (key = value)");
    const auto opt = [&](const std::string& flag, const std::string& key, const std::string& help) {
      app->add_option_function<std::string>(flag, [this, key](const std::string& v) { values[key] = v; }, help);
    };
    opt("--corpus", "corpus", "corpus TSV");
    opt("--out-dir", "out_dir", "output directory");
    if (!model_options) return;
    opt("--weights", "weights", "model tensor archive");
    opt("--model-config", "model_config", "model config JSON (otherwise inferred from the archive)");
    opt("--dump-dir", "dump_dir", "trace dump directory (instead of --weights)");
    opt("--vocab", "vocab", "vocab.json");
    opt("--merges", "merges", "merges.txt");
    opt("--layer", "layer", "hidden-state boundary: last, embed, ln_f, block.<i> or <i>");
    opt("--mode", "mode", "scalar mode: mean_all, pre_trigger, at_trigger");
    opt("--log-base", "log_base", "surprisal unit: nats or bits");
    opt("--threads", "threads", "worker threads");
    opt("--top-k", "top_k", "rogue-dimension candidates to report");
    app->add_flag("--no-plots", no_plots, "skip SVG output");
  }

  RunConfig resolve() const {
    RunConfig cfg = config.empty() ? RunConfig{} : RunConfig::load(config);
    for (const auto& [k, v] : values) cfg.set(k, v);
    if (no_plots) cfg.plots = false;
    if (cfg.corpus.empty()) cfg.corpus = data_dir() / "corpus" / "seed.tsv";
    if (cfg.vocab.empty()) cfg.vocab = data_dir() / "gpt2" / "vocab.json";
    if (cfg.merges.empty()) cfg.merges = data_dir() / "gpt2" / "merges.txt";
    return cfg;
  }
};

struct Backend {
  std::optional<Model> model;
  std::unique_ptr<TraceSource> source;
  std::optional<ModelConfig> config;
};

Backend open_backend(const RunConfig& cfg) {
  Backend b;
  if (!cfg.dump_dir.empty()) {
    b.source = std::make_unique<DumpTraceSource>(TraceDumpDirectory(cfg.dump_dir));
    return b;
  }
  if (cfg.weights.empty()) throw ConfigError("no model: set 'weights' (or 'dump_dir') in the config or on the command line");
  const auto archive = TensorArchive::read(cfg.weights);
  b.config = cfg.model_config.empty() ? infer_config(archive) : ModelConfig::from_file(cfg.model_config);
  b.model = Model::load(archive, *b.config);
  b.source = std::make_unique<ModelTraceSource>(*b.model);
  return b;
}

PipelineResult run(const RunConfig& cfg, const TraceSource& source, std::ostream& err) {
  const auto corpus = load_corpus(cfg.corpus);
  const auto vocab = Vocabulary::from_files(cfg.vocab, cfg.merges);
  auto result = run_pipeline(corpus, vocab, source, {cfg.layer, cfg.log_base, cfg.threads});
  for (const auto& w : result.warnings) err << "warning: " << w << '\n';
  for (const auto& r : result.records)
    if (r.error) err << "error: " << r.family_id << " " << r.comparison << ": " << *r.error << '\n';
  return result;
}

std::map<std::string, std::string> report_header(const RunConfig& cfg, const PipelineResult& result,
                                                 const TraceSource& source) {
  auto header = cfg.header();
  header["layer_resolved"] = result.centering.layer;
  header["trace_source"] = source.describe();
  header["centering_count"] = std::to_string(result.centering.count);
  return header;
}

std::vector<AggregateRecord> all_modes(const std::vector<TrajectoryRecord>& records) {
  std::vector<AggregateRecord> out;
  for (const auto mode : {ScalarMode::MeanAll, ScalarMode::PreTrigger, ScalarMode::AtTrigger}) {
    auto cells = aggregate(records, mode);
    out.insert(out.end(), std::make_move_iterator(cells.begin()), std::make_move_iterator(cells.end()));
  }
  return out;
}

int cmd_corpus_render(const std::string& corpus_path, const std::string& id, bool texts_only, std::ostream& out) {
  const auto families = load_corpus(corpus_path);
  bool found = id.empty();
  std::set<std::string> printed;
  for (const auto& f : families) {
    if (!id.empty() && f.id != id) continue;
    found = true;
    for (const auto& form : enumerate_forms(f)) {
      const auto r = render(f, form);
      if (texts_only) {
        if (printed.insert(r.text).second) out << r.text << '\n';
      } else {
        out << f.id << '\t' << to_string(f.kind) << '\t' << form_label(form) << '\t' << r.text << '\n';
      }
    }
  }
  if (!found) throw CorpusError("no family with id '" + id + "' in " + corpus_path);
  return 0;
}

int cmd_analyze(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  auto backend = open_backend(cfg);
  const auto result = run(cfg, *backend.source, err);
  fs::create_directories(cfg.out_dir);
  const auto header = report_header(cfg, result, *backend.source);
  const auto aggregates = all_modes(result.records);
  write_text_file(cfg.out_dir / "trajectories.csv", trajectories_csv(result.records));
  write_text_file(cfg.out_dir / "trajectories.json", trajectories_json(result.records, header));
  write_text_file(cfg.out_dir / "aggregates.csv", aggregates_csv(aggregates));
  write_text_file(cfg.out_dir / "aggregates.json", aggregates_json(aggregates, header));
  std::size_t plots = 0;
  if (cfg.plots) plots = emit_record_plots(result.records, cfg.out_dir).size();

  std::vector<AggregateRecord> shown;
  std::copy_if(aggregates.begin(), aggregates.end(), std::back_inserter(shown),
               [&](const auto& a) { return a.mode == cfg.mode; });
  out << "# layer=" << result.centering.layer << " log_base=" << to_string(cfg.log_base)
      << " mode=" << to_string(cfg.mode) << '\n';
  out << aggregates_table(shown);
  out << result.records.size() << " comparisons, " << plots << " plots written to " << cfg.out_dir.string() << '\n';
  return 0;
}

int cmd_aggregate(const RunConfig& cfg, const std::string& input, bool mode_given, bool csv, std::ostream& out) {
  const fs::path in_path = input.empty() ? cfg.out_dir / "trajectories.csv" : fs::path(input);
  const auto records = parse_trajectories_csv(read_text_file(in_path));
  std::vector<AggregateRecord> cells = mode_given ? aggregate(records, cfg.mode) : all_modes(records);
  out << (csv ? aggregates_csv(cells) : aggregates_table(cells));
  return 0;
}

int cmd_diagnose(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  auto backend = open_backend(cfg);
  const auto result = run(cfg, *backend.source, err);
  const auto d = result.d_model;

  std::vector<std::span<const float>> vectors;
  std::map<std::string, std::size_t> first_row;
  for (const auto& f : result.forms) {
    if (f.error) continue;
    first_row[f.text] = vectors.size();
    for (std::size_t p = 0; p < f.tokens.size(); ++p)
      vectors.push_back(std::span<const float>(f.hidden).subspan(p * d, d));
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& r : result.records) {
    if (!r.ok()) continue;
    const auto base = first_row.at(r.base_text);
    const auto variant = first_row.at(r.variant_text);
    for (const auto& [i, j] : r.pairs.pairs) pairs.emplace_back(base + i, variant + j);
  }
  DiagnosticsOptions options;
  options.top_k = cfg.top_k;
  const auto diag = dimension_diagnostics(vectors, pairs, options);
  fs::create_directories(cfg.out_dir);
  write_text_file(cfg.out_dir / "diagnostics.json", diagnostics_json(diag));

  out << "layer " << result.centering.layer << ": " << diag.count << " vectors, " << diag.dimensions << " dims\n";
  out << "rogue candidates:";
  for (const auto r : diag.rogue) out << ' ' << r << " (var " << format_number(diag.per_dimension[r].variance) << ')';
  out << "\ntop-" << diag.rogue.size() << " variance share " << format_number(diag.top_variance_share)
      << ", dominance ratio " << format_number(diag.dominance_ratio) << (diag.dominated ? " (dominated)" : "") << '\n';
  out << "manhattan mean " << format_number(diag.mean_manhattan) << " -> " << format_number(diag.mean_manhattan_zeroed)
      << " with rogue dims zeroed (share of L1 " << format_number(diag.rogue_share_of_l1) << ")\n";
  out << "cosine mean " << format_number(diag.mean_cosine) << " -> " << format_number(diag.mean_cosine_zeroed)
      << " (mean |change| " << format_number(diag.mean_abs_cosine_change) << ")\n";
  return 0;
}

int cmd_dump(const RunConfig& cfg, std::ostream& out) {
  if (cfg.weights.empty()) throw ConfigError("dump needs 'weights'");
  const auto archive = TensorArchive::read(cfg.weights);
  const auto mc = cfg.model_config.empty() ? infer_config(archive) : ModelConfig::from_file(cfg.model_config);
  const auto model = Model::load(archive, mc);
  const auto vocab = Vocabulary::from_files(cfg.vocab, cfg.merges);
  fs::create_directories(cfg.out_dir);
  std::map<std::string, std::string> index;
  for (const auto& f : load_corpus(cfg.corpus)) {
    for (const auto& form : enumerate_forms(f)) {
      const auto text = render(f, form).text;
      if (index.contains(text)) continue;
      const auto name = "trace_" + std::to_string(index.size()) + ".safetensors";
      const auto tokens = encode(text, vocab);
      write_trace_dump(model.forward(tokens.ids, {true, cfg.threads}), cfg.out_dir / name, mc);
      index.emplace(text, name);
    }
  }
  TraceDumpDirectory::write_index(cfg.out_dir, index);
  out << index.size() << " trace dumps written to " << cfg.out_dir.string() << '\n';
  return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Garden-path hidden-state analysis for GPT-2 style decoders", "gpath"};
  app.require_subcommand(1);

  auto* corpus_cmd = app.add_subcommand("corpus", "corpus utilities");
  corpus_cmd->require_subcommand(1);
  auto* render_cmd = corpus_cmd->add_subcommand("render", "print every form of one family (or all)");
  std::string corpus_path = (data_dir() / "corpus" / "seed.tsv").string();
  std::string family_id;
  bool texts_only = false;
  render_cmd->add_option("--corpus", corpus_path, "corpus TSV");
  render_cmd->add_option("--id", family_id, "family id (default: every family)");
  render_cmd->add_flag("--texts", texts_only, "print each distinct sentence once, nothing else");

  Overrides analyze_opts, aggregate_opts, diagnose_opts, dump_opts;
  auto* analyze_cmd = app.add_subcommand("analyze", "run the pipeline; write CSV/JSON and SVG plots");
  analyze_opts.bind(analyze_cmd, true);

  auto* aggregate_cmd = app.add_subcommand("aggregate", "summarize a trajectories.csv per kind and comparison");
  aggregate_opts.bind(aggregate_cmd, false);
  std::string aggregate_in, aggregate_mode;
  bool aggregate_csv = false;
  aggregate_cmd->add_option("--in", aggregate_in, "trajectories.csv (default: <out-dir>/trajectories.csv)");
  aggregate_cmd->add_option("--mode", aggregate_mode, "restrict to one scalar mode");
  aggregate_cmd->add_flag("--csv", aggregate_csv, "print aggregates.csv instead of a table");

  auto* diagnose_cmd = app.add_subcommand("diagnose", "rogue-dimension report for the analyzed layer");
  diagnose_opts.bind(diagnose_cmd, true);

  auto* dump_cmd = app.add_subcommand("dump", "write trace dumps for every rendered sentence");
  dump_opts.bind(dump_cmd, true);

  auto* synth_cmd = app.add_subcommand("synth-model", "write a randomly initialized model archive");
  std::string synth_out;
  ModelConfig synth_config;
  synth_config.n_layer = 2;
  synth_config.n_head = 2;
  synth_config.d_model = 8;
  synth_config.n_ctx = 64;
  std::uint64_t synth_seed = 1;
  float synth_scale = 0.1f;
  synth_cmd->add_option("--out", synth_out, "output archive")->required();
  synth_cmd->add_option("--layers", synth_config.n_layer);
  synth_cmd->add_option("--heads", synth_config.n_head);
  synth_cmd->add_option("--d-model", synth_config.d_model);
  synth_cmd->add_option("--vocab-size", synth_config.vocab_size);
  synth_cmd->add_option("--ctx", synth_config.n_ctx);
  synth_cmd->add_option("--seed", synth_seed);
  synth_cmd->add_option("--scale", synth_scale);

  std::vector<std::string> rest(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code != 0) {
      const CLI::App* scope = &app;
      while (!scope->get_subcommands().empty()) scope = scope->get_subcommands().front();
      err << scope->help();
    }
    return code;
  }

  try {
    if (render_cmd->parsed()) return cmd_corpus_render(corpus_path, family_id, texts_only, out);
    if (analyze_cmd->parsed()) return cmd_analyze(analyze_opts.resolve(), out, err);
    if (aggregate_cmd->parsed()) {
      auto cfg = aggregate_opts.resolve();
      if (!aggregate_mode.empty()) cfg.set("mode", aggregate_mode);
      return cmd_aggregate(cfg, aggregate_in, !aggregate_mode.empty(), aggregate_csv, out);
    }
    if (diagnose_cmd->parsed()) return cmd_diagnose(diagnose_opts.resolve(), out, err);
    if (dump_cmd->parsed()) return cmd_dump(dump_opts.resolve(), out);
    if (synth_cmd->parsed()) {
      synthetic_archive(synth_config, synth_seed, synth_scale).write(synth_out);
      out << "wrote " << synth_out << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    err << "gpath: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace gpath::cli
