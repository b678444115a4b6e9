#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "elq/catalog.hpp"
#include "elq/dataset.hpp"
#include "elq/decoder.hpp"
#include "elq/encoder.hpp"
#include "elq/error.hpp"
#include "elq/evalmetrics.hpp"
#include "elq/index.hpp"
#include "elq/io.hpp"
#include "elq/training.hpp"
#include "elq/workload.hpp"

namespace {

using namespace elq;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

IndexMode parse_mode(const std::string& mode) {
  if (mode == "exact") return IndexMode::exact;
  if (mode == "hnsw") return IndexMode::hnsw;
  fail(ErrorCategory::config, "unknown index mode: " + mode);
}

// Gold tuples straight from a question JSONL; no catalog required.
std::vector<QuestionTuples> read_gold_tuples(const std::string& path) {
  std::vector<QuestionTuples> out;
  for_each_line(path, [&](size_t lineno, const std::string& line) {
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      fail(ErrorCategory::format,
           path + ":" + std::to_string(lineno) + ": malformed JSON: " + e.what());
    }
    QuestionTuples qt;
    qt.id = obj.at("id").get<std::string>();
    for (const auto& m : obj.value("mentions", json::array()))
      qt.tuples.push_back(
          {m.at("entity_id").get<std::string>(), {m.at("start").get<int>(), m.at("end").get<int>()}});
    out.push_back(std::move(qt));
  });
  return out;
}

std::vector<QuestionTuples> predictions_to_tuples(const std::vector<QuestionPredictions>& preds) {
  std::vector<QuestionTuples> out;
  out.reserve(preds.size());
  for (const auto& qp : preds) {
    QuestionTuples qt;
    qt.id = qp.id;
    for (const auto& p : qp.predictions) qt.tuples.push_back({p.entity_id, p.span});
    out.push_back(std::move(qt));
  }
  return out;
}

struct CatalogArgs {
  std::string entities;
  std::string embeddings;

  void attach(CLI::App* cmd) {
    cmd->add_option("--entities", entities, "entity records JSONL")->required();
    cmd->add_option("--embeddings", embeddings, "entity embeddings binary")->required();
  }
  EntityCatalog load() const { return EntityCatalog::load(entities, embeddings); }
};

int cmd_generate(CLI::App& app) {
  auto* cmd = app.add_subcommand("generate", "generate a synthetic catalog and question splits");
  auto spec = std::make_shared<WorkloadSpec>();
  auto out_dir = std::make_shared<std::string>();
  cmd->add_option("--out", *out_dir, "output directory")->required();
  cmd->add_option("--num-entities", spec->entities, "entity count");
  cmd->add_option("--dim", spec->dim, "embedding dimension");
  cmd->add_option("--base-dim", spec->base_dim, "base token embedding dimension");
  cmd->add_option("--train", spec->train_questions, "train questions");
  cmd->add_option("--dev", spec->dev_questions, "dev questions");
  cmd->add_option("--test", spec->test_questions, "test questions");
  cmd->add_option("--min-tokens", spec->min_tokens, "min tokens per question");
  cmd->add_option("--max-tokens", spec->max_tokens, "max tokens per question");
  cmd->add_option("--min-mentions", spec->min_mentions, "min planted mentions");
  cmd->add_option("--max-mentions", spec->max_mentions, "max planted mentions");
  cmd->add_option("--noise", spec->sigma, "noise norm on planted token embeddings");
  cmd->add_option("--seed", spec->seed, "generator and encoder seed");
  cmd->callback([spec, out_dir] {
    write_workload(*out_dir, generate_workload(*spec));
    std::cout << "wrote workload to " << *out_dir << "\n";
  });
  return 0;
}

int cmd_build_index(CLI::App& app) {
  auto* cmd = app.add_subcommand("build-index", "build a MIPS index over the catalog");
  auto cat = std::make_shared<CatalogArgs>();
  cat->attach(cmd);
  auto out = std::make_shared<std::string>();
  auto mode = std::make_shared<std::string>("hnsw");
  auto params = std::make_shared<HnswParams>();
  auto seed = std::make_shared<uint64_t>(0);
  cmd->add_option("--out", *out, "index output path")->required();
  cmd->add_option("--index", *mode, "index mode: exact or hnsw");
  cmd->add_option("--hnsw-m", params->M, "max neighbors per node");
  cmd->add_option("--ef-construction", params->ef_construction, "construction beam width");
  cmd->add_option("--ef-search", params->ef_search, "search beam width");
  cmd->add_option("--seed", *seed, "level assignment seed");
  cmd->callback([=] {
    EntityCatalog catalog = cat->load();
    MipsIndex index = MipsIndex::build(catalog, parse_mode(*mode), *params, *seed);
    index.save(*out);
    std::cout << "built " << *mode << " index over " << catalog.size() << " entities -> " << *out
              << "\n";
  });
  return 0;
}

int cmd_train(CLI::App& app) {
  auto* cmd = app.add_subcommand("train", "train projection and scoring heads");
  auto cat = std::make_shared<CatalogArgs>();
  cat->attach(cmd);
  auto data = std::make_shared<std::string>();
  auto index_path = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  auto loss_csv = std::make_shared<std::string>();
  auto config = std::make_shared<TrainConfig>();
  auto base_dim = std::make_shared<int>(64);
  cmd->add_option("--data", *data, "training questions JSONL")->required();
  cmd->add_option("--index-path", *index_path, "prebuilt index file")->required();
  cmd->add_option("--out", *out, "checkpoint output path")->required();
  cmd->add_option("--loss-csv", *loss_csv, "per-epoch loss curve CSV");
  cmd->add_option("--epochs", config->epochs, "training epochs");
  cmd->add_option("--batch", config->batch_size, "batch size");
  cmd->add_option("--lr", config->learning_rate, "peak learning rate");
  cmd->add_option("--clip", config->clip_norm, "gradient clipping max norm");
  cmd->add_option("--warmup", config->warmup_fraction, "linear warmup fraction");
  cmd->add_option("--negatives", config->hard_negatives, "hard negatives per mention");
  cmd->add_option("--max-span-len", config->max_span_len, "max candidate span length");
  cmd->add_option("--seed", config->seed, "encoder/shuffle seed");
  cmd->add_option("--base-dim", *base_dim, "base token embedding dimension");
  cmd->callback([=] {
    EntityCatalog catalog = cat->load();
    MipsIndex index = MipsIndex::load(*index_path, catalog);
    std::vector<TrainingExample> dataset = read_examples(*data, catalog);
    SyntheticEncoder encoder(config->seed, static_cast<size_t>(*base_dim), catalog.dim());
    HeadWeights heads = HeadWeights::zeros(catalog.dim());
    std::vector<LossReport> reports = train(dataset, encoder, heads, catalog, index, *config);
    save_checkpoint(*out, encoder, heads, *config);
    if (!loss_csv->empty()) {
      auto csv = open_output(*loss_csv);
      csv << "epoch,loss_md,loss_ed,total\n";
      for (size_t e = 0; e < reports.size(); ++e)
        csv << e + 1 << "," << reports[e].loss_md << "," << reports[e].loss_ed << ","
            << reports[e].total << "\n";
    }
    std::cout << "trained " << reports.size() << " epochs; final loss " << reports.back().total
              << " -> " << *out << "\n";
  });
  return 0;
}

struct LinkArgs {
  CatalogArgs cat;
  std::string questions, checkpoint, index_path, out;
  std::string precomputed;
  DecoderConfig config;
  bool gold_spans = false;
  int threads = 1;
};

std::vector<QuestionPredictions> run_link(const LinkArgs& args, const EntityCatalog& catalog,
                                          const MipsIndex& index, const Checkpoint& ckpt) {
  if (ckpt.dim != catalog.dim())
    fail(ErrorCategory::config, "checkpoint dimension does not match catalog");
  SyntheticEncoder encoder = ckpt.make_encoder();
  std::vector<TrainingExample> questions = read_examples(args.questions, catalog);

  std::vector<QuestionEmbeddings> embs(questions.size());
  if (!args.precomputed.empty()) {
    std::vector<TokenizedQuestion> toks;
    toks.reserve(questions.size());
    for (const auto& ex : questions) toks.push_back(ex.question);
    std::vector<QuestionEmbeddings> loaded = load_precomputed(args.precomputed, toks);
    std::unordered_map<std::string, QuestionEmbeddings*> by_id;
    for (auto& qe : loaded) by_id[qe.question.id] = &qe;
    for (size_t i = 0; i < questions.size(); ++i) {
      auto it = by_id.find(questions[i].question.id);
      if (it == by_id.end())
        fail(ErrorCategory::format,
             "no precomputed embeddings for question " + questions[i].question.id);
      embs[i] = std::move(*it->second);
    }
  } else {
    for (size_t i = 0; i < questions.size(); ++i) embs[i] = encoder.encode(questions[i].question);
  }

  std::vector<QuestionPredictions> output(questions.size());
  auto process = [&](size_t i) {
    output[i].id = questions[i].question.id;
    if (args.gold_spans) {
      std::vector<SpanCandidate> spans;
      for (const auto& g : questions[i].gold) spans.push_back(g.span);
      output[i].predictions = link_gold_spans(embs[i], spans, index, catalog, args.config);
    } else {
      output[i].predictions =
          link(embs[i], ckpt.heads, index, catalog, args.config).predictions;
    }
  };

  if (args.threads <= 1) {
    for (size_t i = 0; i < questions.size(); ++i) process(i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<size_t> next{0};
    for (int t = 0; t < args.threads; ++t)
      pool.emplace_back([&] {
        for (size_t i = next.fetch_add(1); i < questions.size(); i = next.fetch_add(1)) process(i);
      });
    for (auto& th : pool) th.join();
  }
  return output;
}

int cmd_link(CLI::App& app) {
  auto* cmd = app.add_subcommand("link", "run end-to-end entity linking over questions");
  auto args = std::make_shared<LinkArgs>();
  args->cat.attach(cmd);
  cmd->add_option("--questions", args->questions, "questions JSONL")->required();
  cmd->add_option("--checkpoint", args->checkpoint, "trained checkpoint")->required();
  cmd->add_option("--index-path", args->index_path, "prebuilt index file")->required();
  cmd->add_option("--out", args->out, "predictions JSONL output")->required();
  cmd->add_option("--precomputed", args->precomputed, "precomputed question embeddings");
  cmd->add_option("--gamma", args->config.gamma, "joint/mention log threshold");
  cmd->add_option("--top-k", args->config.top_k_entities, "retrieved candidates per mention");
  cmd->add_option("--fallback", args->config.fallback_mentions, "fallback mention count");
  cmd->add_option("--max-span-len", args->config.max_span_len, "max candidate span length");
  cmd->add_flag("--gold-spans", args->gold_spans, "inject gold mention boundaries (el-only runs)");
  cmd->add_option("--threads", args->threads, "worker threads (order-preserving)");
  cmd->callback([args] {
    EntityCatalog catalog = args->cat.load();
    MipsIndex index = MipsIndex::load(args->index_path, catalog);
    Checkpoint ckpt = load_checkpoint(args->checkpoint);
    std::vector<QuestionPredictions> output = run_link(*args, catalog, index, ckpt);
    write_predictions(args->out, output);
    std::cout << "linked " << output.size() << " questions -> " << args->out << "\n";
  });
  return 0;
}

int cmd_eval(CLI::App& app) {
  auto* cmd = app.add_subcommand("eval", "score predictions against gold annotations");
  auto gold_path = std::make_shared<std::string>();
  auto pred_path = std::make_shared<std::string>();
  auto mode = std::make_shared<std::string>("full");
  auto out = std::make_shared<std::string>();
  cmd->add_option("--gold", *gold_path, "gold questions JSONL")->required();
  cmd->add_option("--pred", *pred_path, "predictions JSONL")->required();
  cmd->add_option("--mode", *mode, "full, md-only, or el-only");
  cmd->add_option("--out", *out, "machine-readable report JSON path");
  cmd->callback([=] {
    std::vector<QuestionTuples> gold = read_gold_tuples(*gold_path);
    std::vector<QuestionTuples> pred = predictions_to_tuples(read_predictions(*pred_path));
    EvalReport report;
    if (*mode == "full")
      report = weak_match(gold, pred);
    else if (*mode == "md-only")
      report = md_only(gold, pred);
    else if (*mode == "el-only")
      report = el_only(gold, pred);
    else
      fail(ErrorCategory::config, "unknown eval mode: " + *mode);
    std::cout << report_to_table(report);
    if (!out->empty()) {
      auto f = open_output(*out);
      f << report_to_json(report) << "\n";
    }
  });
  return 0;
}

int cmd_bench(CLI::App& app) {
  auto* cmd = app.add_subcommand("bench", "single-threaded inference throughput benchmark");
  auto args = std::make_shared<LinkArgs>();
  auto reps = std::make_shared<int>(1);
  auto out = std::make_shared<std::string>();
  auto threads = std::make_shared<int>(1);
  args->cat.attach(cmd);
  cmd->add_option("--questions", args->questions, "questions JSONL")->required();
  cmd->add_option("--checkpoint", args->checkpoint, "trained checkpoint")->required();
  cmd->add_option("--index-path", args->index_path, "prebuilt index file")->required();
  cmd->add_option("--gamma", args->config.gamma, "joint/mention log threshold");
  cmd->add_option("--top-k", args->config.top_k_entities, "retrieved candidates per mention");
  cmd->add_option("--fallback", args->config.fallback_mentions, "fallback mention count");
  cmd->add_option("--max-span-len", args->config.max_span_len, "max candidate span length");
  cmd->add_option("--repetitions", *reps, "timing repetitions, mean reported");
  cmd->add_option("--threads", *threads, "must be 1; the benchmark is single-threaded");
  cmd->add_option("--out", *out, "benchmark report JSON path");
  cmd->callback([=] {
    if (*threads != 1) {
      std::cerr << "warning: bench is pinned to a single thread; ignoring --threads\n";
    }
    EntityCatalog catalog = args->cat.load();
    MipsIndex index = MipsIndex::load(args->index_path, catalog);
    Checkpoint ckpt = load_checkpoint(args->checkpoint);
    SyntheticEncoder encoder = ckpt.make_encoder();
    std::vector<TrainingExample> questions = read_examples(args->questions, catalog);
    if (questions.empty()) fail(ErrorCategory::config, "no questions to benchmark");

    double encode_s = 0, mention_s = 0, retrieval_s = 0, decode_s = 0, total_s = 0;
    for (int rep = 0; rep < std::max(1, *reps); ++rep) {
      auto run_start = Clock::now();
      for (const auto& ex : questions) {
        auto t0 = Clock::now();
        QuestionEmbeddings emb = encoder.encode(ex.question);
        encode_s += seconds_since(t0);

        t0 = Clock::now();
        std::vector<SpanCandidate> spans =
            enumerate_spans(static_cast<int>(emb.matrix.rows), args->config.max_span_len);
        std::vector<ScoredMention> scored = mention_scores(emb, ckpt.heads, spans);
        auto [mentions, fallback_used] =
            select_mentions(std::move(scored), args->config.gamma, args->config.fallback_mentions);
        mention_s += seconds_since(t0);

        std::vector<LinkedPrediction> pairs;
        for (const ScoredMention& m : mentions) {
          MentionRep rep_vec = mention_rep(emb, m.span);
          t0 = Clock::now();
          std::vector<SearchHit> hits = index.search(rep_vec.y, args->config.top_k_entities);
          retrieval_s += seconds_since(t0);

          t0 = Clock::now();
          std::vector<int> candidates;
          for (const SearchHit& h : hits) candidates.push_back(h.entity);
          CandidateSet set = score_entities(rep_vec, candidates, catalog);
          for (const CandidateEntry& entry : set.entries) {
            double joint = m.log_p_mention + entry.log_p;
            if (joint >= args->config.gamma || fallback_used)
              pairs.push_back({entry.entity,
                               catalog.record(static_cast<size_t>(entry.entity)).id, m.span,
                               m.log_p_mention, entry.log_p, joint});
          }
          decode_s += seconds_since(t0);
        }
        t0 = Clock::now();
        remove_overlaps(std::move(pairs));
        decode_s += seconds_since(t0);
      }
      total_s += seconds_since(run_start);
    }

    double r = static_cast<double>(std::max(1, *reps));
    double mean_total = total_s / r;
    json report{
        {"questions", questions.size()},
        {"repetitions", std::max(1, *reps)},
        {"batch_size", 1},
        {"threads", 1},
        {"total_seconds", mean_total},
        {"questions_per_second", static_cast<double>(questions.size()) / mean_total},
        {"stage_seconds",
         {{"encode", encode_s / r},
          {"mention_scoring", mention_s / r},
          {"retrieval", retrieval_s / r},
          {"decode", decode_s / r}}},
    };
    std::cout << report.dump(2) << "\n";
    if (!out->empty()) {
      auto f = open_output(*out);
      f << report.dump() << "\n";
    }
  });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"elq: end-to-end entity linking for questions"};
  app.require_subcommand(1);
  cmd_generate(app);
  cmd_build_index(app);
  cmd_train(app);
  cmd_link(app);
  cmd_eval(app);
  cmd_bench(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const elq::Error& e) {
    nlohmann::json err{{"error", {{"category", elq::category_name(e.category())},
                                  {"message", e.what()}}}};
    std::cerr << err.dump() << "\n";
    switch (e.category()) {
      case elq::ErrorCategory::io: return 3;
      case elq::ErrorCategory::format: return 4;
      case elq::ErrorCategory::config: return 5;
      case elq::ErrorCategory::version: return 6;
      case elq::ErrorCategory::internal: return 7;
    }
    return 7;
  } catch (const std::exception& e) {
    nlohmann::json err{{"error", {{"category", "internal"}, {"message", e.what()}}}};
    std::cerr << err.dump() << "\n";
    return 7;
  }
  return 0;
}
