#include "chartrans/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <json.hpp>

#include "chartrans/analysis.hpp"
#include "chartrans/bundle.hpp"
#include "chartrans/corpus.hpp"
#include "chartrans/error.hpp"
#include "chartrans/multitask.hpp"
#include "chartrans/stream.hpp"
#include "chartrans/synthetic.hpp"
#include "chartrans/vocab.hpp"

namespace chartrans::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  return out;
}

json file_entry(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::size_t lines = 0;
  std::string line;
  while (std::getline(in, line)) ++lines;
  return {{"path", path.string()}, {"bytes", fs::file_size(path)}, {"lines", lines}};
}

// Paper preset values; the rest of the flags are free.
struct Preset {
  std::string name = "desk";
  bool paper() const { return name == "paper"; }
};

void check_preset(const std::string& name) {
  if (name != "desk" && name != "paper") throw CLI::ValidationError("--preset", "desk or paper");
}

struct StreamFlags {
  std::size_t src_window = 6;
  std::size_t tgt_window = 5;
  std::size_t vote = 2;

  void add(CLI::App* sub) {
    sub->add_option("--src-window", src_window, "source words per window")->capture_default_str();
    sub->add_option("--tgt-window", tgt_window, "target words kept per window")
        ->capture_default_str();
    sub->add_option("--vote", vote, "merge vote threshold")->capture_default_str();
  }
  void pin(const Preset& preset, std::ostream& err) {
    if (!preset.paper()) return;
    if (src_window != 6 || tgt_window != 5 || vote != 2) {
      err << "preset paper: windows pinned to 6/5, vote to 2\n";
    }
    src_window = 6;
    tgt_window = 5;
    vote = 2;
  }
};

// Loads src -> tgt. With no source given, the bundle's default model; with no
// target, the pivot (or the default model's target).
ModelBundle open_model(const std::string& dir, const std::string& src, const std::string& tgt) {
  if (src.empty() && tgt.empty()) return load_bundle(dir);
  auto contents = read_bundle(dir);
  contents.config.validate();
  std::string s = src, t = tgt;
  const auto& extra = contents.extra;
  const bool has_default = extra.is_object() && extra.contains("default_model");
  if (s.empty()) {
    if (!has_default) throw ContractError("bundle " + dir + " does not name a default model");
    s = extra["default_model"].at("source").get<std::string>();
  }
  if (t.empty()) {
    if (extra.is_object() && extra.contains("pivot")) {
      t = extra["pivot"].get<std::string>();
    } else if (has_default) {
      t = extra["default_model"].at("target").get<std::string>();
    } else {
      throw ContractError("bundle " + dir + " names no target language");
    }
  }
  return ModelBundle{contents.config, contents.vocab,
                     model_from_tensors(contents.tensors, contents.config, s, t), s, t};
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::uint64_t seed = 7;
  std::string out;
  std::size_t lexicon = 60;
  std::size_t topics = 4;
  bool inflection = false;
  std::size_t sentences = 200;
  std::size_t heldout = 100;
  std::size_t mono = 2000;
  std::size_t docs_per_topic = 10;
  std::size_t doc_words = 60;
  std::size_t streams = 10;
  std::size_t stories = 5;
  std::size_t story_min = 40;
  std::size_t story_max = 80;
  std::size_t predictor_streams = 40;
  std::size_t nll_window = 5;
  std::string lang = "l1";
  std::string pivot = "pv";
};

int do_synth(const SynthArgs& a, std::ostream& out, std::ostream& err) {
  SyntheticConfig sc;
  sc.seed = a.seed;
  sc.lexicon_size = a.lexicon;
  sc.n_topics = a.topics;
  sc.inflection = a.inflection;
  sc.source_lang = a.lang;
  sc.target_lang = a.pivot;
  const SyntheticLanguagePair gen(sc);
  std::mt19937_64 rng(a.seed);
  const fs::path dir(a.out);
  fs::create_directories(dir);
  std::vector<fs::path> files;
  auto add = [&](const fs::path& p) { files.push_back(p); };

  const auto parallel = gen.parallel(a.sentences, rng);
  const auto heldout = gen.parallel(a.heldout, rng);
  save_parallel(parallel, (dir / "parallel.tsv").string());
  add(dir / "parallel.tsv");
  save_parallel(heldout, (dir / "heldout.tsv").string());
  add(dir / "heldout.tsv");

  for (const bool side : {false, true}) {
    const auto& lang = side ? a.pivot : a.lang;
    const auto mono = gen.monolingual(a.mono, side, rng);
    auto f = open_out(dir / ("mono." + lang + ".txt"));
    for (const auto& [s, t] : mono.pairs) f << s << '\n';
    add(dir / ("mono." + lang + ".txt"));
  }

  {
    auto m = open_out(dir / "manifest.tsv");
    m << "translational\t" << a.lang << '\t' << a.pivot << "\tparallel.tsv\n"
      << "monolingual\t" << a.lang << '\t' << a.lang << "\tmono." << a.lang << ".txt\n"
      << "monolingual\t" << a.pivot << '\t' << a.pivot << "\tmono." << a.pivot << ".txt\n";
    auto b = open_out(dir / "manifest.baseline.tsv");
    b << "translational\t" << a.lang << '\t' << a.pivot << "\tparallel.tsv\n";
    add(dir / "manifest.tsv");
    add(dir / "manifest.baseline.tsv");
  }

  {
    auto labels = open_out(dir / "docs.labels.tsv");
    for (const bool side : {false, true}) {
      const auto& lang = side ? a.pivot : a.lang;
      std::vector<StreamDocument> docs;
      for (std::size_t t = 0; t < a.topics; ++t) {
        for (std::size_t i = 0; i < a.docs_per_topic; ++i) {
          const std::string id = lang + ":doc" + std::to_string(docs.size());
          docs.push_back(gen.document(t, a.doc_words, side, id, rng));
          labels << id << "\ttopic" << t << '\n';
        }
      }
      save_stream_documents(docs, (dir / ("docs." + lang + ".tsv")).string());
      add(dir / ("docs." + lang + ".tsv"));
    }
    add(dir / "docs.labels.tsv");
  }

  {
    std::vector<StreamDocument> docs;
    auto truth = open_out(dir / "streams.truth.tsv");
    for (std::size_t s = 0; s < a.streams; ++s) {
      const std::string id = "doc" + std::to_string(s);
      auto story = gen.story_stream(a.stories, a.story_min, a.story_max, false, id, rng);
      for (const auto b : story.boundaries) truth << id << '\t' << b << '\n';
      docs.push_back(std::move(story.doc));
    }
    save_stream_documents(docs, (dir / "streams.tsv").string());
    add(dir / "streams.tsv");
    add(dir / "streams.truth.tsv");
  }

  {
    // Next-window prediction pairs from separately drawn streams.
    ParallelCorpus pred;
    const std::size_t w = a.nll_window;
    for (std::size_t s = 0; s < a.predictor_streams; ++s) {
      const auto story = gen.story_stream(a.stories, a.story_min, a.story_max, false,
                                          "train" + std::to_string(s), rng);
      const auto words = story.doc.words();
      for (std::size_t t = 0; t + 2 * w <= words.size(); ++t) {
        const std::span<const std::string> all(words);
        pred.pairs.emplace_back(join_words(all.subspan(t, w)), join_words(all.subspan(t + w, w)));
      }
    }
    save_parallel(pred, (dir / "predictor.tsv").string());
    auto m = open_out(dir / "predictor.manifest.tsv");
    m << "translational\t" << a.lang << '\t' << a.lang << "\tpredictor.tsv\n";
    add(dir / "predictor.tsv");
    add(dir / "predictor.manifest.tsv");
  }

  json files_json = json::array();
  for (const auto& f : files) files_json.push_back(file_entry(f));
  err << "synth: wrote " << files.size() << " files to " << dir.string() << '\n';
  out << json{{"command", "synth"}, {"seed", a.seed}, {"files", files_json}}.dump(2) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string tasks;
  std::string out;
  std::string preset = "desk";
  std::uint64_t seed = 1;
  std::size_t updates = 2000;
  std::size_t turn = 50;
  std::string optimizer = "sgd";
  std::optional<double> lr;
  std::size_t patience = 0;
  std::optional<std::size_t> hidden;
  std::optional<std::size_t> embed;
  std::optional<std::size_t> batch;
  std::optional<std::size_t> max_len;
  std::size_t vocab_cap = 90;
  std::size_t truncate = 100;
  bool no_reverse = false;
  std::optional<double> init_scale;
  std::optional<double> clip;
};

int do_train(TrainArgs a, std::ostream& out, std::ostream& err) {
  check_preset(a.preset);
  const Preset preset{a.preset};
  if (preset.paper()) {
    if ((a.hidden && *a.hidden != 400) || (a.embed && *a.embed != 400) ||
        (a.batch && *a.batch != 16) || (a.max_len && *a.max_len != 100) || a.vocab_cap != 90) {
      err << "preset paper: hidden/embed 400, batch 16, max_len 100, vocab cap 90 are pinned\n";
    }
    a.hidden = a.embed = 400;
    a.batch = 16;
    a.max_len = 100;
    a.vocab_cap = 90;
  }
  const auto kind = optimizer_kind_from_string(a.optimizer);

  auto tasks = load_task_manifest(a.tasks);
  load_task_corpora(tasks, a.truncate);
  std::vector<std::string> texts;
  for (const auto& t : tasks) {
    for (const auto& [s, g] : t.corpus->pairs) {
      texts.push_back(s);
      if (t.kind == TaskKind::translational) texts.push_back(g);
    }
  }
  const auto vocab = build_vocab(texts, a.vocab_cap);

  auto cfg = preset.paper() ? Seq2SeqConfig::paper(vocab.size()) : Seq2SeqConfig::desk(vocab.size());
  if (a.hidden) cfg.hidden_dim = *a.hidden;
  if (a.embed) cfg.embed_dim = *a.embed;
  if (a.batch) cfg.batch_size = *a.batch;
  if (a.max_len) cfg.max_len = *a.max_len;
  if (a.init_scale) cfg.init_scale = *a.init_scale;
  if (a.clip) cfg.clip_norm = *a.clip;
  cfg.reverse_source = !a.no_reverse;
  cfg.validate();

  ParamRegistry registry(cfg, a.seed);
  registry.init_for(tasks);
  AlternatingOptions opt;
  opt.updates_per_turn = a.turn;
  opt.total_updates = a.updates;
  opt.optimizer.kind = kind;
  opt.lr = a.lr.value_or(kind == OptimizerKind::adam ? 0.01 : 0.5);
  opt.patience = a.patience;
  opt.seed = a.seed;
  opt.after_turn = [&](const TurnInfo& info) {
    err << "turn " << info.turn << " task " << tasks[info.task].name() << " updates "
        << info.first_update << ".." << info.first_update + info.updates << '\n';
  };
  const auto report = alternating_train(registry, tasks, vocab, opt);
  save_registry(registry, tasks, vocab, a.out);

  json task_json = json::array();
  std::vector<std::size_t> cursor(tasks.size(), 0);
  std::vector<json> curves(tasks.size(), json::array());
  for (const auto& turn : report.turns) {
    const auto& losses = report.task_losses[turn.task];
    double sum = 0.0;
    for (std::size_t k = 0; k < turn.updates; ++k) sum += losses[cursor[turn.task] + k];
    cursor[turn.task] += turn.updates;
    curves[turn.task].push_back(sum / static_cast<double>(turn.updates));
  }
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto& losses = report.task_losses[i];
    json t{{"name", tasks[i].name()},
           {"kind", to_string(tasks[i].kind)},
           {"pairs", tasks[i].corpus->size()},
           {"updates", losses.size()},
           {"turn_mean_loss", curves[i]}};
    if (!losses.empty()) {
      t["first_loss"] = losses.front();
      t["last_loss"] = losses.back();
    }
    task_json.push_back(t);
  }
  out << json{{"command", "train"},
              {"bundle", a.out},
              {"preset", cfg.preset},
              {"config", config_to_json(cfg)},
              {"vocab_size", vocab.size()},
              {"optimizer", to_string(kind)},
              {"lr_final", report.turn_lr.empty() ? opt.lr : report.turn_lr.back()},
              {"total_updates", report.schedule.size()},
              {"tasks", task_json}}
             .dump(2)
      << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- translate

struct TranslateArgs {
  std::string bundle;
  std::string in;
  std::string out_prefix;
  std::string format = "text";
  std::string src_lang;
  std::string tgt_lang;
  std::string preset = "desk";
  StreamFlags stream;
};

std::vector<StreamDocument> read_input(const std::string& path, const std::string& format) {
  if (format == "stream") return load_stream_documents(path);
  if (format != "text") throw InputError("unknown input format '" + format + "'");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  StreamDocument doc;
  doc.id = fs::path(path).stem().string();
  for (auto& w : split_words(ss.str())) doc.tokens.push_back({std::move(w), {}, {}, {}});
  doc.validate();
  return {doc};
}

int do_translate(TranslateArgs a, std::ostream& out, std::ostream& err) {
  check_preset(a.preset);
  a.stream.pin(Preset{a.preset}, err);
  const auto model = open_model(a.bundle, a.src_lang, a.tgt_lang);
  const auto docs = read_input(a.in, a.format);
  std::string prefix = a.out_prefix;
  if (prefix.empty()) prefix = (fs::path(a.in).parent_path() / fs::path(a.in).stem()).string();
  const fs::path merged_path = prefix + ".merged.txt";
  const fs::path table_path = prefix + ".table.tsv";
  const fs::path trace_path = prefix + ".trace.tsv";
  auto merged_out = open_out(merged_path);
  auto table_out = open_out(table_path);
  auto trace_out = open_out(trace_path);

  const StreamOptions opts{a.stream.src_window, a.stream.tgt_window, 1};
  json docs_json = json::array();
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const auto table = translate_windows(docs[d], model, opts);
    const auto merged = merge_columns(table, a.stream.vote);
    const auto text = final_text(merged);
    if (a.format == "stream") merged_out << docs[d].id << '\t';
    merged_out << text << '\n';
    if (d) {
      table_out << '\n';
      trace_out << '\n';
    }
    write_table_tsv(table, table_out);
    write_trace_tsv(table, trace_out);
    docs_json.push_back({{"id", docs[d].id},
                         {"source_words", docs[d].tokens.size()},
                         {"windows", table.rows.size()},
                         {"merged_words", merged.size()}});
    err << "translate: " << docs[d].id << ' ' << table.rows.size() << " windows\n";
  }
  merged_out.close();
  table_out.close();
  trace_out.close();
  out << json{{"command", "translate"},
              {"model", {{"source", model.source_lang}, {"target", model.target_lang}}},
              {"src_window", a.stream.src_window},
              {"tgt_window", a.stream.tgt_window},
              {"vote", a.stream.vote},
              {"documents", docs_json},
              {"files", {file_entry(merged_path), file_entry(table_path), file_entry(trace_path)}}}
             .dump(2)
      << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- embed

struct EmbedArgs {
  std::string bundle;
  std::string in;
  std::string out;
  std::string lang;
  std::string id_prefix;
  std::string format = "stream";
  std::size_t src_window = 6;
};

int do_embed(const EmbedArgs& a, std::ostream& out, std::ostream& err) {
  const auto model = open_model(a.bundle, a.lang, "");
  auto docs = read_input(a.in, a.format);
  std::vector<DocVector> vectors;
  for (const auto& doc : docs) {
    const StreamOptions opts{a.src_window, 5, 1};
    DocTrace trace{a.id_prefix + doc.id, window_traces(doc.words(), model, opts)};
    vectors.push_back(doc_vector(trace));
  }
  auto f = open_out(a.out);
  write_vectors_tsv(vectors, f);
  f.close();
  err << "embed: " << vectors.size() << " documents via enc." << model.source_lang << '\n';
  out << json{{"command", "embed"},
              {"encoder", model.source_lang},
              {"documents", vectors.size()},
              {"dimension", vectors.empty() ? 0 : vectors.front().values.size()},
              {"files", {file_entry(a.out)}}}
             .dump(2)
      << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- cluster

struct ClusterArgs {
  std::vector<std::string> in;
  std::string out;
  std::size_t k = 4;
  std::uint64_t seed = 1;
  std::size_t max_iter = 100;
  std::string labels;
};

std::map<std::string, std::string> read_key_values(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path);
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError(path + ": expected id<TAB>value");
    out[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return out;
}

int do_cluster(const ClusterArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<DocVector> vectors;
  for (const auto& path : a.in) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot read " + path);
    for (auto& v : read_vectors_tsv(f)) vectors.push_back(std::move(v));
  }
  const auto result = kmeans(vectors, a.k, a.seed, a.max_iter);
  auto f = open_out(a.out);
  std::vector<std::size_t> sizes(a.k, 0);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    f << vectors[i].id << '\t' << result.assignment[i] << '\n';
    ++sizes[result.assignment[i]];
  }
  f.close();
  json summary{{"command", "cluster"},
               {"k", a.k},
               {"points", vectors.size()},
               {"iterations", result.iterations},
               {"inertia", result.inertia},
               {"sizes", sizes},
               {"files", {file_entry(a.out)}}};
  if (!a.labels.empty()) {
    const auto labels = read_key_values(a.labels);
    std::vector<std::string> ordered;
    for (const auto& v : vectors) {
      auto it = labels.find(v.id);
      if (it == labels.end()) throw InputError("no label for document " + v.id);
      ordered.push_back(it->second);
    }
    summary["purity"] = purity(result.assignment, ordered);
  }
  err << "cluster: " << vectors.size() << " points, " << result.iterations << " iterations\n";
  out << summary.dump(2) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- segment

struct SegmentArgs {
  std::string bundle;
  std::string in;
  std::string out;
  std::string truth;
  std::string lang;
  std::size_t window = 5;
  std::size_t tolerance = 2;
  FusionConfig fusion;
};

int do_segment(const SegmentArgs& a, std::ostream& out, std::ostream& err) {
  const auto predictor = open_model(a.bundle, a.lang, a.lang);
  const auto docs = load_stream_documents(a.in);
  std::map<std::string, std::vector<std::size_t>> truth;
  if (!a.truth.empty()) {
    std::ifstream in(a.truth, std::ios::binary);
    if (!in) throw FormatError("cannot read " + a.truth);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos) throw FormatError(a.truth + ": expected doc_id<TAB>word_index");
      truth[line.substr(0, tab)].push_back(std::stoul(line.substr(tab + 1)));
    }
  }
  auto f = open_out(a.out);
  json docs_json = json::array();
  std::size_t tp = 0, n_pred = 0, n_true = 0;
  for (const auto& doc : docs) {
    const auto nll = next_window_nll(doc.words(), predictor, a.window);
    const auto signals = fuse_signals(raw_signals(doc, nll), a.fusion);
    const auto found = detect_boundaries(signals, a.fusion.z_threshold, a.fusion.min_gap);
    std::map<std::size_t, double> combined;
    for (const auto& s : signals) combined[s.position] = s.combined;
    for (const auto b : found) f << doc.id << '\t' << b << '\t' << combined[b] << '\n';
    json d{{"id", doc.id}, {"words", doc.tokens.size()}, {"boundaries", found}};
    if (auto it = truth.find(doc.id); it != truth.end()) {
      const auto score = score_boundaries(found, it->second, a.tolerance);
      const auto contrast = seam_contrast(nll, it->second, a.window);
      tp += score.true_positives;
      n_pred += score.predicted;
      n_true += score.actual;
      d["f1"] = score.f1;
      d["seam_nll"] = contrast.seam_mean;
      d["within_nll"] = contrast.within_mean;
    }
    docs_json.push_back(d);
  }
  f.close();
  json summary{{"command", "segment"},
               {"predictor", predictor.source_lang},
               {"fusion",
                {{"alpha", a.fusion.alpha},
                 {"beta", a.fusion.beta},
                 {"gamma", a.fusion.gamma},
                 {"z_threshold", a.fusion.z_threshold},
                 {"min_gap", a.fusion.min_gap}}},
               {"documents", docs_json},
               {"files", {file_entry(a.out)}}};
  if (!truth.empty()) {
    const double p = n_pred ? static_cast<double>(tp) / static_cast<double>(n_pred) : 0.0;
    const double r = n_true ? static_cast<double>(tp) / static_cast<double>(n_true) : 0.0;
    summary["precision"] = p;
    summary["recall"] = r;
    summary["f1"] = p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  }
  err << "segment: " << docs.size() << " documents\n";
  out << summary.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

std::vector<std::string> config_arguments(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read config file " + path);
  std::vector<std::string> args;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    while (!key.empty() && key.front() == '-') key.erase(0, 1);
    if (key.empty()) throw FormatError(path + ":" + std::to_string(line_no) + ": empty key");
    if (value == "true") {
      args.push_back("--" + key);
    } else if (value != "false") {
      args.push_back("--" + key);
      args.push_back(value);
    }
  }
  return args;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Character-level translation, stream merging and story analysis"};
  app.name("chartrans");
  app.require_subcommand(1, 1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string config_path;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value file; command-line flags win");
  };

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "generate a synthetic language pair and fixtures");
  add_config(s);
  s->add_option("--seed", synth.seed)->capture_default_str();
  s->add_option("--out", synth.out, "output directory")->required();
  s->add_option("--lexicon", synth.lexicon)->capture_default_str();
  s->add_option("--topics", synth.topics)->capture_default_str();
  s->add_flag("--inflection", synth.inflection, "inflect pivot words by position");
  s->add_option("--sentences", synth.sentences, "parallel training pairs")->capture_default_str();
  s->add_option("--heldout", synth.heldout)->capture_default_str();
  s->add_option("--mono", synth.mono, "monolingual sentences per language")->capture_default_str();
  s->add_option("--docs-per-topic", synth.docs_per_topic)->capture_default_str();
  s->add_option("--doc-words", synth.doc_words)->capture_default_str();
  s->add_option("--streams", synth.streams)->capture_default_str();
  s->add_option("--stories", synth.stories)->capture_default_str();
  s->add_option("--story-min", synth.story_min)->capture_default_str();
  s->add_option("--story-max", synth.story_max)->capture_default_str();
  s->add_option("--predictor-streams", synth.predictor_streams)->capture_default_str();
  s->add_option("--nll-window", synth.nll_window)->capture_default_str();
  s->add_option("--lang", synth.lang)->capture_default_str();
  s->add_option("--pivot", synth.pivot)->capture_default_str();

  TrainArgs train;
  auto* t = app.add_subcommand("train", "alternating multitask training");
  add_config(t);
  t->add_option("--tasks", train.tasks, "task manifest")->required();
  t->add_option("--out", train.out, "bundle directory")->required();
  t->add_option("--preset", train.preset, "desk or paper")->capture_default_str();
  t->add_option("--seed", train.seed)->capture_default_str();
  t->add_option("--updates", train.updates, "total updates")->capture_default_str();
  t->add_option("--turn", train.turn, "updates per turn")->capture_default_str();
  t->add_option("--optimizer", train.optimizer, "sgd or adam")->capture_default_str();
  t->add_option("--lr", train.lr, "learning rate (sgd 0.5, adam 0.01)");
  t->add_option("--patience", train.patience, "cycles without improvement before halving lr")
      ->capture_default_str();
  t->add_option("--hidden", train.hidden);
  t->add_option("--embed", train.embed);
  t->add_option("--batch", train.batch);
  t->add_option("--max-len", train.max_len);
  t->add_option("--vocab-cap", train.vocab_cap)->capture_default_str();
  t->add_option("--truncate", train.truncate, "characters kept per sentence")
      ->capture_default_str();
  t->add_flag("--no-reverse", train.no_reverse, "feed the source in reading order");
  t->add_option("--init-scale", train.init_scale);
  t->add_option("--clip", train.clip, "global gradient norm limit");

  TranslateArgs translate;
  auto* tr = app.add_subcommand("translate", "sliding-window translation with column merge");
  add_config(tr);
  tr->add_option("--bundle", translate.bundle)->required();
  tr->add_option("--in", translate.in)->required();
  tr->add_option("--out-prefix", translate.out_prefix, "defaults to the input path sans extension");
  tr->add_option("--format", translate.format, "text or stream")->capture_default_str();
  tr->add_option("--src-lang", translate.src_lang);
  tr->add_option("--tgt-lang", translate.tgt_lang);
  tr->add_option("--preset", translate.preset)->capture_default_str();
  translate.stream.add(tr);

  EmbedArgs embed;
  auto* e = app.add_subcommand("embed", "document vectors from window traces");
  add_config(e);
  e->add_option("--bundle", embed.bundle)->required();
  e->add_option("--in", embed.in)->required();
  e->add_option("--out", embed.out)->required();
  e->add_option("--lang", embed.lang, "encoder language (default: the default model's source)");
  e->add_option("--id-prefix", embed.id_prefix);
  e->add_option("--format", embed.format, "text or stream")->capture_default_str();
  e->add_option("--src-window", embed.src_window)->capture_default_str();

  ClusterArgs cluster;
  auto* c = app.add_subcommand("cluster", "spherical k-means over document vectors");
  add_config(c);
  c->add_option("--in", cluster.in, "vector TSV files")
      ->required()
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  c->add_option("--out", cluster.out)->required();
  c->add_option("--k", cluster.k)->capture_default_str();
  c->add_option("--seed", cluster.seed)->capture_default_str();
  c->add_option("--max-iter", cluster.max_iter)->capture_default_str();
  c->add_option("--labels", cluster.labels, "doc_id<TAB>label, for purity");

  SegmentArgs segment;
  auto* g = app.add_subcommand("segment", "story boundaries from next-window NLL");
  add_config(g);
  g->add_option("--bundle", segment.bundle, "next-window predictor")->required();
  g->add_option("--in", segment.in)->required();
  g->add_option("--out", segment.out)->required();
  g->add_option("--truth", segment.truth, "doc_id<TAB>word_index, for scoring");
  g->add_option("--lang", segment.lang);
  g->add_option("--window", segment.window)->capture_default_str();
  g->add_option("--tolerance", segment.tolerance)->capture_default_str();
  g->add_option("--alpha", segment.fusion.alpha)->capture_default_str();
  g->add_option("--beta", segment.fusion.beta)->capture_default_str();
  g->add_option("--gamma", segment.fusion.gamma)->capture_default_str();
  g->add_option("--threshold", segment.fusion.z_threshold)->capture_default_str();
  g->add_option("--min-gap", segment.fusion.min_gap)->capture_default_str();

  try {
    // Config values go right after the subcommand so later flags override them.
    std::vector<std::string> argv = args;
    for (std::size_t i = 1; i < argv.size(); ++i) {
      std::string path;
      if (argv[i] == "--config" && i + 1 < argv.size()) {
        path = argv[i + 1];
      } else if (argv[i].rfind("--config=", 0) == 0) {
        path = argv[i].substr(9);
      } else {
        continue;
      }
      const auto extra = config_arguments(path);
      argv.insert(argv.begin() + 1, extra.begin(), extra.end());
      break;
    }
    std::reverse(argv.begin(), argv.end());
    app.parse(argv);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const Error& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitData;
  }

  try {
    if (s->parsed()) return do_synth(synth, out, err);
    if (t->parsed()) return do_train(train, out, err);
    if (tr->parsed()) return do_translate(translate, out, err);
    if (e->parsed()) return do_embed(embed, out, err);
    if (c->parsed()) return do_cluster(cluster, out, err);
    if (g->parsed()) return do_segment(segment, out, err);
  } catch (const CLI::ValidationError& ex) {
    err << "usage: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const Error& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitData;
  } catch (const nlohmann::json::exception& ex) {
    err << "error: malformed bundle metadata: " << ex.what() << '\n';
    return kExitData;
  } catch (const std::filesystem::filesystem_error& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace chartrans::cli
