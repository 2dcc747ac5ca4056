#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "chartrans/bundle.hpp"
#include "chartrans/corpus.hpp"
#include "chartrans/seq2seq.hpp"
#include "chartrans/vocab.hpp"

namespace chartrans {

enum class TaskKind { translational, monolingual_autoencoder };

std::string to_string(TaskKind kind);
TaskKind task_kind_from_string(const std::string& s);

struct TaskSpec {
  TaskKind kind = TaskKind::translational;
  std::string source;
  std::string target;
  std::string corpus_path;
  std::shared_ptr<const ParallelCorpus> corpus;

  std::string name() const { return source + "->" + target; }
  // Throws InputError when kind and languages disagree.
  void validate(const std::string& pivot) const;
};

// One translational task L->pivot per L != pivot, then one autoencoder L->L
// per language (pivot included), both in the order of `languages`.
std::vector<TaskSpec> build_tasks(const std::vector<std::string>& languages,
                                  const std::string& pivot);

// `kind<TAB>src<TAB>tgt<TAB>corpus-path` per line; relative paths resolve
// against the manifest's directory.
std::vector<TaskSpec> load_task_manifest(const std::string& path);

// Loads every task's corpus_path: tab-separated pairs for translational
// tasks, one sentence per line for autoencoders.
void load_task_corpora(std::vector<TaskSpec>& tasks,
                       std::optional<std::size_t> truncate_chars = std::nullopt);

// Common target of the translational tasks; for autoencoder-only lists, the
// first task's language.
std::string infer_pivot(const std::vector<TaskSpec>& tasks);

// Owns every parameter group exactly once. Group names:
//   enc.<lang>      encoder LSTM of a source language
//   dec.<lang>      decoder LSTM + output projection of a target language
//   emb.src.<lang>  source-side embedding
//   emb.tgt.<lang>  target-side embedding
class ParamRegistry {
 public:
  ParamRegistry(Seq2SeqConfig config, std::uint64_t seed);

  const Seq2SeqConfig& config() const { return config_; }

  // Creates (deterministically from the seed and group name) any group the
  // tasks need that does not exist yet.
  void init_for(const std::vector<TaskSpec>& tasks);

  std::shared_ptr<LstmCellParams<float>> encoder(const std::string& lang);
  std::shared_ptr<DecoderParams<float>> decoder(const std::string& lang);
  std::shared_ptr<Tensor> src_embedding(const std::string& lang);
  std::shared_ptr<Tensor> tgt_embedding(const std::string& lang);

  bool has_group(const std::string& name) const;
  std::vector<std::string> group_names() const;
  // Group names a task's view references.
  static std::vector<std::string> groups_of(const TaskSpec& task);

  // A view over the shared storage; mutations through it are seen by every
  // other view of the same groups. Throws ContractError on missing groups.
  Seq2SeqParams<float> assemble(const TaskSpec& task) const;

  // Flattened copy of one group's values, for change detection.
  std::vector<float> group_values(const std::string& name) const;

  std::map<std::string, const Tensor*> tensors() const;
  void load_tensors(const std::map<std::string, Tensor>& tensors);

 private:
  Seq2SeqConfig config_;
  std::uint64_t seed_;
  std::map<std::string, std::shared_ptr<LstmCellParams<float>>> encoders_;
  std::map<std::string, std::shared_ptr<DecoderParams<float>>> decoders_;
  std::map<std::string, std::shared_ptr<Tensor>> src_embeddings_;
  std::map<std::string, std::shared_ptr<Tensor>> tgt_embeddings_;
};

// Alternating multitask trainer hooks and result.
struct TurnInfo {
  std::size_t turn = 0;
  std::size_t task = 0;          // index into the task list
  std::size_t first_update = 0;  // global update index of the turn's first step
  std::size_t updates = 0;
};

struct AlternatingOptions {
  std::size_t updates_per_turn = 50;
  std::size_t total_updates = 1000;
  double lr = 0.5;
  std::uint64_t seed = 1;
  // Halve lr when a full cycle's mean training loss fails to improve for this
  // many cycles; 0 keeps lr fixed.
  std::size_t patience = 0;
  OptimizerConfig optimizer;
  std::function<void(const TurnInfo&)> before_turn;
  std::function<void(const TurnInfo&)> after_turn;
};

struct TrainingReport {
  std::vector<std::size_t> schedule;             // task index of every update, in order
  std::vector<TurnInfo> turns;
  std::vector<std::vector<double>> task_losses;  // per task, loss of each of its updates
  std::vector<double> turn_lr;                   // learning rate used in each turn
};

// The round-robin expansion: tasks in list order, `updates_per_turn` each,
// truncated at `total_updates`.
std::vector<std::size_t> round_robin_schedule(std::size_t n_tasks, std::size_t updates_per_turn,
                                              std::size_t total_updates);

TrainingReport alternating_train(ParamRegistry& registry, const std::vector<TaskSpec>& tasks,
                                 const CharVocab& vocab, const AlternatingOptions& options);

Batch encode_pairs(const ParallelCorpus& corpus, const CharVocab& vocab);

// Mean per-symbol NLL of a task's view on held-out pairs.
double task_loss(const ParamRegistry& registry, const TaskSpec& task, const Batch& pairs);

void save_registry(const ParamRegistry& registry, const std::vector<TaskSpec>& tasks,
                   const CharVocab& vocab, const std::string& dir);

struct RegistryBundle {
  ParamRegistry registry;
  std::vector<TaskSpec> tasks;  // without corpora
  CharVocab vocab;
  std::string pivot;
};

RegistryBundle load_registry(const std::string& dir);

}  // namespace chartrans
