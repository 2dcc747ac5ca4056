#include "chartrans/multitask.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "chartrans/error.hpp"

namespace chartrans {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::mt19937_64 group_rng(std::uint64_t seed, const std::string& name) {
  std::vector<std::uint32_t> material{static_cast<std::uint32_t>(seed),
                                      static_cast<std::uint32_t>(seed >> 32)};
  for (unsigned char ch : name) material.push_back(ch);
  std::seed_seq seq(material.begin(), material.end());
  return std::mt19937_64(seq);
}

template <typename Map>
auto find_group(const Map& groups, const std::string& lang, const std::string& name) {
  auto it = groups.find(lang);
  if (it == groups.end()) throw ContractError("parameter group '" + name + "' is not initialized");
  return it->second;
}

void append(std::vector<float>& out, const Tensor& t) {
  out.insert(out.end(), t.data().begin(), t.data().end());
}

}  // namespace

std::string to_string(TaskKind kind) {
  return kind == TaskKind::translational ? "translational" : "monolingual";
}

TaskKind task_kind_from_string(const std::string& s) {
  if (s == "translational") return TaskKind::translational;
  if (s == "monolingual" || s == "autoencoder" || s == "monolingual-autoencoder") {
    return TaskKind::monolingual_autoencoder;
  }
  throw InputError("unknown task kind '" + s + "'");
}

void TaskSpec::validate(const std::string& pivot) const {
  for (const auto& lang : {source, target}) {
    if (lang.empty() || lang.find_first_of("./\\\t ") != std::string::npos) {
      throw InputError("invalid language label '" + lang + "'");
    }
  }
  if (kind == TaskKind::monolingual_autoencoder && source != target) {
    throw InputError("autoencoder task " + name() + " must map a language to itself");
  }
  if (kind == TaskKind::translational && target != pivot) {
    throw InputError("translational task " + name() + " must target the pivot '" + pivot + "'");
  }
}

std::vector<TaskSpec> build_tasks(const std::vector<std::string>& languages,
                                  const std::string& pivot) {
  if (std::find(languages.begin(), languages.end(), pivot) == languages.end()) {
    throw InputError("pivot language '" + pivot + "' is not among the languages");
  }
  std::vector<TaskSpec> tasks;
  for (const auto& lang : languages) {
    if (lang != pivot) tasks.push_back({TaskKind::translational, lang, pivot, "", nullptr});
  }
  for (const auto& lang : languages) {
    tasks.push_back({TaskKind::monolingual_autoencoder, lang, lang, "", nullptr});
  }
  return tasks;
}

std::vector<TaskSpec> load_task_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read task manifest " + path);
  const fs::path base = fs::path(path).parent_path();
  std::vector<TaskSpec> tasks;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::size_t pos = 0;
    while (true) {
      auto tab = line.find('\t', pos);
      f.push_back(line.substr(pos, tab == std::string::npos ? std::string::npos : tab - pos));
      if (tab == std::string::npos) break;
      pos = tab + 1;
    }
    if (f.size() != 4) {
      throw FormatError("task manifest line " + std::to_string(line_no) +
                        ": expected kind<TAB>src<TAB>tgt<TAB>corpus-path");
    }
    fs::path corpus(f[3]);
    if (corpus.is_relative()) corpus = base / corpus;
    tasks.push_back({task_kind_from_string(f[0]), f[1], f[2], corpus.string(), nullptr});
  }
  if (tasks.empty()) throw InputError("task manifest " + path + " lists no tasks");
  return tasks;
}

void load_task_corpora(std::vector<TaskSpec>& tasks, std::optional<std::size_t> truncate_chars) {
  for (auto& task : tasks) {
    if (task.corpus_path.empty()) throw InputError("task " + task.name() + " has no corpus path");
    auto corpus = task.kind == TaskKind::translational
                      ? load_parallel(task.corpus_path, truncate_chars)
                      : load_monolingual(task.corpus_path, truncate_chars);
    corpus.source_lang = task.source;
    corpus.target_lang = task.target;
    task.corpus = std::make_shared<const ParallelCorpus>(std::move(corpus));
  }
}

std::string infer_pivot(const std::vector<TaskSpec>& tasks) {
  if (tasks.empty()) throw InputError("no tasks");
  for (const auto& t : tasks) {
    if (t.kind == TaskKind::translational) return t.target;
  }
  return tasks.front().target;
}

ParamRegistry::ParamRegistry(Seq2SeqConfig config, std::uint64_t seed)
    : config_(std::move(config)), seed_(seed) {
  config_.validate();
}

void ParamRegistry::init_for(const std::vector<TaskSpec>& tasks) {
  const std::size_t V = config_.vocab_size, E = config_.embed_dim, H = config_.hidden_dim;
  const double scale = config_.init_scale;
  // Same initializer as a standalone model, applied per group.
  for (const auto& task : tasks) {
    if (!encoders_.count(task.source) || !src_embeddings_.count(task.source)) {
      auto rng = group_rng(seed_, "enc." + task.source);
      std::uniform_real_distribution<double> emb(-0.5, 0.5);
      if (!encoders_.count(task.source)) {
        encoders_[task.source] = std::make_shared<LstmCellParams<float>>(
            LstmCellParams<float>::random(E, H, static_cast<float>(scale), 1.0f, rng));
      }
      if (!src_embeddings_.count(task.source)) {
        auto erng = group_rng(seed_, "emb.src." + task.source);
        auto t = std::make_shared<Tensor>(std::vector<std::size_t>{V, E});
        for (float& v : t->data()) v = static_cast<float>(emb(erng));
        src_embeddings_[task.source] = t;
      }
    }
    if (!decoders_.count(task.target)) {
      auto rng = group_rng(seed_, "dec." + task.target);
      auto d = std::make_shared<DecoderParams<float>>(DecoderParams<float>{
          LstmCellParams<float>::random(E, H, static_cast<float>(scale), 1.0f, rng),
          Tensor({H, V}), Tensor({V})});
      std::uniform_real_distribution<double> w(-scale, scale);
      for (float& v : d->proj_W.data()) v = static_cast<float>(w(rng));
      decoders_[task.target] = d;
    }
    if (!tgt_embeddings_.count(task.target)) {
      auto rng = group_rng(seed_, "emb.tgt." + task.target);
      std::uniform_real_distribution<double> emb(-0.5, 0.5);
      auto t = std::make_shared<Tensor>(std::vector<std::size_t>{V, E});
      for (float& v : t->data()) v = static_cast<float>(emb(rng));
      tgt_embeddings_[task.target] = t;
    }
  }
}

std::shared_ptr<LstmCellParams<float>> ParamRegistry::encoder(const std::string& lang) {
  return find_group(encoders_, lang, "enc." + lang);
}
std::shared_ptr<DecoderParams<float>> ParamRegistry::decoder(const std::string& lang) {
  return find_group(decoders_, lang, "dec." + lang);
}
std::shared_ptr<Tensor> ParamRegistry::src_embedding(const std::string& lang) {
  return find_group(src_embeddings_, lang, "emb.src." + lang);
}
std::shared_ptr<Tensor> ParamRegistry::tgt_embedding(const std::string& lang) {
  return find_group(tgt_embeddings_, lang, "emb.tgt." + lang);
}

bool ParamRegistry::has_group(const std::string& name) const {
  const auto names = group_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

std::vector<std::string> ParamRegistry::group_names() const {
  std::vector<std::string> names;
  for (const auto& [lang, g] : encoders_) names.push_back("enc." + lang);
  for (const auto& [lang, g] : decoders_) names.push_back("dec." + lang);
  for (const auto& [lang, g] : src_embeddings_) names.push_back("emb.src." + lang);
  for (const auto& [lang, g] : tgt_embeddings_) names.push_back("emb.tgt." + lang);
  std::sort(names.begin(), names.end());
  return names;
}

std::vector<std::string> ParamRegistry::groups_of(const TaskSpec& task) {
  return {"enc." + task.source, "emb.src." + task.source, "dec." + task.target,
          "emb.tgt." + task.target};
}

Seq2SeqParams<float> ParamRegistry::assemble(const TaskSpec& task) const {
  Seq2SeqParams<float> view;
  view.src_embedding = find_group(src_embeddings_, task.source, "emb.src." + task.source);
  view.encoder = find_group(encoders_, task.source, "enc." + task.source);
  view.tgt_embedding = find_group(tgt_embeddings_, task.target, "emb.tgt." + task.target);
  view.decoder = find_group(decoders_, task.target, "dec." + task.target);
  return view;
}

std::vector<float> ParamRegistry::group_values(const std::string& name) const {
  std::vector<float> out;
  for (const auto& [tensor_name, t] : tensors()) {
    if (tensor_name == name || tensor_name.rfind(name + ".", 0) == 0) append(out, *t);
  }
  if (out.empty()) throw ContractError("no parameter group named '" + name + "'");
  return out;
}

std::map<std::string, const Tensor*> ParamRegistry::tensors() const {
  std::map<std::string, const Tensor*> out;
  for (const auto& [lang, g] : encoders_) {
    out["enc." + lang + ".W"] = &g->W;
    out["enc." + lang + ".b"] = &g->b;
  }
  for (const auto& [lang, g] : decoders_) {
    out["dec." + lang + ".W"] = &g->cell.W;
    out["dec." + lang + ".b"] = &g->cell.b;
    out["dec." + lang + ".proj_W"] = &g->proj_W;
    out["dec." + lang + ".proj_b"] = &g->proj_b;
  }
  for (const auto& [lang, g] : src_embeddings_) out["emb.src." + lang] = g.get();
  for (const auto& [lang, g] : tgt_embeddings_) out["emb.tgt." + lang] = g.get();
  return out;
}

void ParamRegistry::load_tensors(const std::map<std::string, Tensor>& tensors) {
  const std::size_t V = config_.vocab_size, E = config_.embed_dim, H = config_.hidden_dim;
  auto expect = [](const Tensor& t, std::vector<std::size_t> shape, const std::string& name) {
    if (t.shape() != shape) throw DimensionError("tensor '" + name + "' has the wrong shape");
    if (!t.all_finite()) throw ContractError("tensor '" + name + "' is not finite");
    return t;
  };
  auto get = [&](const std::string& name) -> const Tensor& {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw ContractError("bundle has no tensor '" + name + "'");
    return it->second;
  };
  decltype(encoders_) enc;
  decltype(decoders_) dec;
  decltype(src_embeddings_) se;
  decltype(tgt_embeddings_) te;
  for (const auto& [name, t] : tensors) {
    if (name.rfind("emb.src.", 0) == 0) {
      se[name.substr(8)] = std::make_shared<Tensor>(expect(t, {V, E}, name));
    } else if (name.rfind("emb.tgt.", 0) == 0) {
      te[name.substr(8)] = std::make_shared<Tensor>(expect(t, {V, E}, name));
    } else if (name.rfind("enc.", 0) == 0 && name.size() > 6 &&
               name.compare(name.size() - 2, 2, ".W") == 0) {
      const auto lang = name.substr(4, name.size() - 6);
      enc[lang] = std::make_shared<LstmCellParams<float>>(LstmCellParams<float>{
          E, H, expect(t, {4 * H, E + H}, name),
          expect(get("enc." + lang + ".b"), {4 * H}, "enc." + lang + ".b")});
    } else if (name.rfind("dec.", 0) == 0 && name.size() > 11 &&
               name.compare(name.size() - 7, 7, ".proj_W") == 0) {
      const auto lang = name.substr(4, name.size() - 11);
      const auto p = "dec." + lang;
      dec[lang] = std::make_shared<DecoderParams<float>>(DecoderParams<float>{
          LstmCellParams<float>{E, H, expect(get(p + ".W"), {4 * H, E + H}, p + ".W"),
                                expect(get(p + ".b"), {4 * H}, p + ".b")},
          expect(t, {H, V}, name), expect(get(p + ".proj_b"), {V}, p + ".proj_b")});
    }
  }
  encoders_ = std::move(enc);
  decoders_ = std::move(dec);
  src_embeddings_ = std::move(se);
  tgt_embeddings_ = std::move(te);
}

std::vector<std::size_t> round_robin_schedule(std::size_t n_tasks, std::size_t updates_per_turn,
                                              std::size_t total_updates) {
  if (n_tasks == 0) throw InputError("schedule needs at least one task");
  if (updates_per_turn < 1) throw InputError("updates_per_turn must be >= 1");
  std::vector<std::size_t> schedule;
  schedule.reserve(total_updates);
  for (std::size_t u = 0; u < total_updates; ++u) {
    schedule.push_back((u / updates_per_turn) % n_tasks);
  }
  return schedule;
}

Batch encode_pairs(const ParallelCorpus& corpus, const CharVocab& vocab) {
  Batch out;
  out.reserve(corpus.size());
  for (const auto& [src, tgt] : corpus.pairs) {
    out.emplace_back(encode_chars(vocab, src, false), encode_chars(vocab, tgt, false));
  }
  return out;
}

namespace {

// Epoch-style sampler: a seeded permutation consumed batch by batch.
class BatchSampler {
 public:
  BatchSampler(const Batch* data, std::uint64_t seed, std::size_t index)
      : data_(data) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index)};
    rng_.seed(seq);
    order_.resize(data_->size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    cursor_ = order_.size();
  }

  Batch next(std::size_t batch_size) {
    Batch batch;
    while (batch.size() < batch_size) {
      if (cursor_ == order_.size()) {
        std::shuffle(order_.begin(), order_.end(), rng_);
        cursor_ = 0;
      }
      batch.push_back((*data_)[order_[cursor_++]]);
      if (batch.size() == data_->size()) break;
    }
    return batch;
  }

 private:
  const Batch* data_;
  std::mt19937_64 rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

}  // namespace

TrainingReport alternating_train(ParamRegistry& registry, const std::vector<TaskSpec>& tasks,
                                 const CharVocab& vocab, const AlternatingOptions& options) {
  if (tasks.empty()) throw InputError("alternating_train: no tasks");
  if (options.total_updates < 1) throw InputError("alternating_train: total_updates must be >= 1");
  const auto schedule =
      round_robin_schedule(tasks.size(), options.updates_per_turn, options.total_updates);
  const std::string pivot = infer_pivot(tasks);

  // Configuration checks happen before any parameter changes.
  std::set<std::size_t> scheduled(schedule.begin(), schedule.end());
  std::vector<Batch> data(tasks.size());
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    tasks[i].validate(pivot);
    if (!scheduled.count(i)) continue;
    if (!tasks[i].corpus || tasks[i].corpus->pairs.empty()) {
      throw InputError("task " + tasks[i].name() + " is scheduled but has an empty corpus");
    }
    data[i] = encode_pairs(*tasks[i].corpus, vocab);
  }
  registry.init_for(tasks);

  std::vector<BatchSampler> samplers;
  for (std::size_t i = 0; i < tasks.size(); ++i) samplers.emplace_back(&data[i], options.seed, i);

  TrainingReport report;
  report.task_losses.resize(tasks.size());
  const auto& cfg = registry.config();
  LrSchedule lr(options.lr, options.patience);
  Optimizer<float> opt(options.optimizer);
  double cycle_loss = 0.0;
  std::size_t cycle_updates = 0;
  std::size_t u = 0;
  while (u < schedule.size()) {
    TurnInfo turn{report.turns.size(), schedule[u], u, 0};
    while (u + turn.updates < schedule.size() && schedule[u + turn.updates] == turn.task &&
           turn.updates < options.updates_per_turn) {
      ++turn.updates;
    }
    if (options.before_turn) options.before_turn(turn);
    auto view = registry.assemble(tasks[turn.task]);
    report.turn_lr.push_back(lr.lr());
    for (std::size_t k = 0; k < turn.updates; ++k) {
      const double loss =
          train_step(view, cfg, samplers[turn.task].next(cfg.batch_size), lr.lr(), opt);
      report.task_losses[turn.task].push_back(loss);
      report.schedule.push_back(turn.task);
      cycle_loss += loss;
      ++cycle_updates;
    }
    u += turn.updates;
    report.turns.push_back(turn);
    if (turn.task + 1 == tasks.size()) {
      lr.observe(cycle_loss / static_cast<double>(cycle_updates));
      cycle_loss = 0.0;
      cycle_updates = 0;
    }
    if (options.after_turn) options.after_turn(turn);
  }
  return report;
}

double task_loss(const ParamRegistry& registry, const TaskSpec& task, const Batch& pairs) {
  return batch_loss(registry.assemble(task), registry.config(), pairs);
}

void save_registry(const ParamRegistry& registry, const std::vector<TaskSpec>& tasks,
                   const CharVocab& vocab, const std::string& dir) {
  const std::string pivot = infer_pivot(tasks);
  json task_list = json::array();
  std::set<std::string> languages;
  for (const auto& t : tasks) {
    task_list.push_back({{"kind", to_string(t.kind)}, {"source", t.source}, {"target", t.target}});
    languages.insert(t.source);
    languages.insert(t.target);
  }
  const TaskSpec& first = tasks.front();
  const auto it = std::find_if(tasks.begin(), tasks.end(), [](const TaskSpec& t) {
    return t.kind == TaskKind::translational;
  });
  const TaskSpec& def = it == tasks.end() ? first : *it;
  json extra{{"pivot", pivot},
             {"languages", languages},
             {"tasks", task_list},
             {"default_model", {{"source", def.source}, {"target", def.target}}}};
  write_bundle(dir, registry.config(), vocab, registry.tensors(), extra);
}

RegistryBundle load_registry(const std::string& dir) {
  auto contents = read_bundle(dir);
  ParamRegistry registry(contents.config, 0);
  registry.load_tensors(contents.tensors);
  std::vector<TaskSpec> tasks;
  std::string pivot;
  if (contents.extra.contains("tasks")) {
    for (const auto& t : contents.extra["tasks"]) {
      tasks.push_back({task_kind_from_string(t.at("kind").get<std::string>()),
                       t.at("source").get<std::string>(), t.at("target").get<std::string>(), "",
                       nullptr});
    }
  }
  if (contents.extra.contains("pivot")) pivot = contents.extra["pivot"].get<std::string>();
  return RegistryBundle{std::move(registry), std::move(tasks), std::move(contents.vocab), pivot};
}

}  // namespace chartrans
