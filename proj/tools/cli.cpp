#include "cli.hpp"

#include <csignal>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>

#include "CLI11.hpp"
#include "http_server.hpp"
#include "httplib.h"
#include "mathkg/error.hpp"
#include "mathkg/faults.hpp"
#include "mathkg/pipeline.hpp"
#include "mathkg/search.hpp"
#include "mathkg/service.hpp"
#include "mathkg/text.hpp"

namespace fs = std::filesystem;

namespace mathkg {

namespace {

const std::set<std::string> kCommands = {"ingest",      "build-datasets", "train-tagger", "train-relclf",
                                         "extract",     "fuse",           "train-embed",  "eval",
                                         "pipeline",    "serve",          "search",       "faults"};

httplib::Server* g_server = nullptr;

void stop_server(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"mathkg: build and query a mathematical knowledge graph"};
  app.require_subcommand(1);

  PipelineConfig cfg;
  cfg.data_dir = default_data_dir();
  std::string corpus;
  std::string ker_gold, ker_pred, erc_gold, erc_pred;
  int port = 8750;
  std::string host = "127.0.0.1";
  std::string question, student, answers_file;
  SearchOptions search;
  FaultOptions faults;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--data-dir", cfg.data_dir, "Data directory (default $MATHKG_DATA_DIR or ./data)");
    sub->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
  };
  auto datasets_opts = [&](CLI::App* sub) {
    sub->add_option("--rules", cfg.rules_file, "Hand-written pattern rules (JSON)");
    sub->add_option("--min-tfidf", cfg.min_tfidf, "tf-idf threshold for n-gram seed recall")->capture_default_str();
    sub->add_option("--na-ratio", cfg.na_ratio, "NA examples per positive")->capture_default_str();
  };
  auto tagger_opts = [&](CLI::App* sub) {
    sub->add_option("--tagger-epochs", cfg.tagger_epochs, "Perceptron epochs")->capture_default_str();
  };
  auto relclf_opts = [&](CLI::App* sub) {
    sub->add_option("--relclf-epochs", cfg.relclf.epochs)->capture_default_str();
    sub->add_option("--relclf-lr", cfg.relclf.learning_rate)->capture_default_str();
    sub->add_option("--relclf-batch", cfg.relclf.batch_size)->capture_default_str();
    sub->add_option("--relclf-l2", cfg.relclf.l2)->capture_default_str();
  };
  auto extract_opts = [&](CLI::App* sub) {
    sub->add_option("--min-confidence", cfg.min_confidence, "Lowest classifier probability kept")
        ->capture_default_str();
  };
  auto fuse_opts = [&](CLI::App* sub) { sub->add_option("--manual", cfg.manual_file, "Manual triples (TSV)"); };
  auto embed_opts = [&](CLI::App* sub) {
    sub->add_option("--dim", cfg.transe.dim)->capture_default_str();
    sub->add_option("--margin", cfg.transe.margin)->capture_default_str();
    sub->add_option("--embed-lr", cfg.transe.learning_rate)->capture_default_str();
    sub->add_option("--embed-epochs", cfg.transe.epochs)->capture_default_str();
    sub->add_option("--negatives", cfg.transe.negatives_per_positive)->capture_default_str();
  };

  auto* ingest = app.add_subcommand("ingest", "Read a documents JSONL dump into the data directory");
  common(ingest);
  ingest->add_option("--corpus", corpus, "Documents JSONL")->required();

  auto* build = app.add_subcommand("build-datasets", "Distant supervision: gazetteer, seeds, KER and ERC data");
  common(build);
  datasets_opts(build);

  auto* ttag = app.add_subcommand("train-tagger", "Train the BIO entity tagger");
  common(ttag);
  tagger_opts(ttag);

  auto* trel = app.add_subcommand("train-relclf", "Train the relation classifier");
  common(trel);
  relclf_opts(trel);

  auto* extract = app.add_subcommand("extract", "Run tagger and classifier over the corpus");
  common(extract);
  extract_opts(extract);

  auto* fuse = app.add_subcommand("fuse", "Canonicalize entities and merge triples into the graph");
  common(fuse);
  fuse_opts(fuse);

  auto* tembed = app.add_subcommand("train-embed", "Train TransE embeddings over the graph");
  common(tembed);
  embed_opts(tembed);

  auto* eval = app.add_subcommand("eval", "Precision/recall/F1 of KER and ERC on the test splits");
  common(eval);
  eval->add_option("--ker-gold", ker_gold, "Frozen KER gold (CoNLL)");
  eval->add_option("--ker-pred", ker_pred, "Frozen KER predictions (CoNLL)");
  eval->add_option("--erc-gold", erc_gold, "Frozen ERC gold (TSV)");
  eval->add_option("--erc-pred", erc_pred, "Frozen ERC predictions (TSV)");

  auto* pipeline = app.add_subcommand("pipeline", "Run every stage from ingest to train-embed");
  common(pipeline);
  pipeline->add_option("--corpus", corpus, "Documents JSONL (skip ingest when omitted)");
  datasets_opts(pipeline);
  tagger_opts(pipeline);
  relclf_opts(pipeline);
  extract_opts(pipeline);
  fuse_opts(pipeline);
  embed_opts(pipeline);

  auto* serve = app.add_subcommand("serve", "Serve the HTTP JSON API");
  common(serve);
  serve->add_option("--port", port)->capture_default_str();
  serve->add_option("--host", host)->capture_default_str();

  auto* search_cmd = app.add_subcommand("search", "Answer a question against the graph");
  common(search_cmd);
  search_cmd->add_option("question", question)->required();
  search_cmd->add_option("-k,--hops", search.k)->capture_default_str();
  search_cmd->add_option("--lambda", search.lambda)->capture_default_str();
  search_cmd->add_option("--top", search.top_n)->capture_default_str();

  auto* faults_cmd = app.add_subcommand("faults", "Faults analysis for one student");
  common(faults_cmd);
  faults_cmd->add_option("--student", student)->required();
  faults_cmd->add_option("--answers", answers_file, "Answer log (default <data-dir>/answers.jsonl)");
  faults_cmd->add_option("-k,--hops", faults.k)->capture_default_str();
  faults_cmd->add_option("--gamma", faults.gamma)->capture_default_str();
  faults_cmd->add_option("--threshold", faults.evidence_threshold)->capture_default_str();

  if (argc >= 2) {
    const std::string first = argv[1];
    if (!first.empty() && first[0] != '-' && !kCommands.contains(first)) {
      err << "unknown command '" << first << "'\n\n" << app.help();
      return 2;
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (ingest->parsed()) {
      stage_ingest(cfg, corpus);
    } else if (build->parsed()) {
      stage_build_datasets(cfg);
    } else if (ttag->parsed()) {
      stage_train_tagger(cfg);
    } else if (trel->parsed()) {
      stage_train_relclf(cfg);
    } else if (extract->parsed()) {
      stage_extract(cfg);
    } else if (fuse->parsed()) {
      stage_fuse(cfg, err);
    } else if (tembed->parsed()) {
      stage_train_embed(cfg);
    } else if (eval->parsed()) {
      const int given = !ker_gold.empty() + !ker_pred.empty() + !erc_gold.empty() + !erc_pred.empty();
      if (given != 0 && given != 4) {
        err << "eval: --ker-gold, --ker-pred, --erc-gold and --erc-pred go together\n";
        return 2;
      }
      const auto rows = given == 4 ? evaluate_predictions(ker_gold, ker_pred, erc_gold, erc_pred)
                                   : evaluate_models(cfg);
      out << format_eval_table(rows);
    } else if (pipeline->parsed()) {
      run_pipeline(cfg, corpus, err);
      out << graph_manifest(load_graph(cfg.data_dir));
    } else if (serve->parsed()) {
      AppState state(cfg.data_dir);
      auto server = make_http_server(state);
      g_server = server.get();
      std::signal(SIGINT, stop_server);
      std::signal(SIGTERM, stop_server);
      if (!server->bind_to_port(host, port)) {
        err << "cannot bind " << host << ":" << port << "\n";
        return 1;
      }
      err << "serving " << cfg.data_dir.string() << " on http://" << host << ":" << port << "\n";
      server->listen_after_bind();
      g_server = nullptr;
    } else if (search_cmd->parsed()) {
      const auto snap = load_snapshot(cfg.data_dir);
      const auto answer =
          answer_question(question, snap.graph, snap.embeddings, search, snap.tagger ? &*snap.tagger : nullptr);
      out << "topic: " << answer.topic << "\n";
      for (const auto& r : answer.results) {
        out << text::format_double(r.score) << "\t" << r.entity << "\t";
        for (const auto& s : r.path) {
          out << "(" << s.from << ", " << to_string(s.relation)
              << (s.direction == Direction::Forward ? "" : " (reversed)") << ", " << s.to << ") ";
        }
        out << "\n";
      }
    } else if (faults_cmd->parsed()) {
      const auto g = load_graph(cfg.data_dir);
      const fs::path log = answers_file.empty() ? cfg.data_dir / files::kAnswers : fs::path(answers_file);
      const auto report = analyze_student(g, read_answers(log), student, faults);
      out << fault_report_to_json(report) << "\n";
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace mathkg
