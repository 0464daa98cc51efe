// emotionpush: synth | train | eval | classify | serve
//
// Exit status: 0 success, 1 usage error, 2 runtime failure.

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "emotionpush/corpus.hpp"
#include "emotionpush/embedding.hpp"
#include "emotionpush/ensemble.hpp"
#include "emotionpush/eval.hpp"
#include "emotionpush/http_server.hpp"
#include "emotionpush/service.hpp"
#include "emotionpush/taxonomy.hpp"

namespace ep = emotionpush;

namespace {

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ep::NotFound("cannot open " + path);
  auto doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw ep::ParseError(path + ": malformed JSON");
  return doc;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  out.flush();
  if (!out) throw ep::Error("cannot write " + path);
}

void check_table(const ep::ensemble::EnsembleModel& model, const ep::embedding::EmbeddingTable& table) {
  if (!model.embedding_table_id.empty() && model.embedding_table_id != table.fingerprint()) {
    std::clog << "warning: embeddings " << table.fingerprint() << " differ from the training table "
              << model.embedding_table_id << "\n";
  }
}

struct SynthArgs {
  std::string config;
  std::string out_corpus;
  std::string out_embeddings;
  std::string out_taxonomy;
  std::optional<std::uint64_t> seed;
};

int run_synth(const SynthArgs& a) {
  ep::corpus::SynthConfig cfg;
  if (!a.config.empty()) cfg = ep::corpus::synth_config_from_json(read_json_file(a.config));
  if (a.seed) cfg.seed = *a.seed;
  const auto out = ep::corpus::synth_corpus(cfg);
  ep::corpus::save_corpus(out.corpus, a.out_corpus);
  ep::embedding::save_word2vec(out.table, a.out_embeddings);
  if (!a.out_taxonomy.empty()) write_text_file(a.out_taxonomy, ep::ensemble::to_json(out.taxonomy).dump(2) + "\n");
  std::cout << "wrote " << out.corpus.documents.size() << " documents, " << out.table.vocab_size() << " tokens x "
            << out.table.dim() << "\n";
  return 0;
}

struct TrainArgs {
  std::string corpus;
  std::string embeddings;
  std::string taxonomy;
  std::string mode = "fine40";
  std::string grid;
  std::string out;
  std::uint64_t seed = 0;
  std::size_t n_pos = 800;
  std::size_t n_neg = 800;
  std::size_t heldout = 200;
  std::size_t threads = 0;
};

int run_train(const TrainArgs& a) {
  const auto config = a.taxonomy.empty() ? ep::ensemble::default_taxonomy_config()
                                         : ep::ensemble::load_taxonomy_config(a.taxonomy);
  const auto corpus = ep::corpus::load_corpus(a.corpus, config.taxonomy);
  const auto table = ep::embedding::load_word2vec(a.embeddings);

  ep::eval::ProtocolConfig protocol;
  protocol.mode = ep::ensemble::parse_mode(a.mode);
  protocol.sampling.n_pos = a.n_pos;
  protocol.sampling.n_neg = a.n_neg;
  protocol.sampling.heldout_per_label = a.heldout;
  protocol.sampling.seed = a.seed;
  protocol.base.seed = a.seed;
  protocol.threads = a.threads;
  if (!a.grid.empty()) protocol.grid = ep::eval::grid_spec_from_json(read_json_file(a.grid));

  const auto model = ep::eval::tune_and_train(corpus, table, config, protocol);
  ep::ensemble::save_ensemble(model, a.out);
  std::cout << "trained " << model.labels.size() << " classifiers (" << ep::ensemble::to_string(model.mode)
            << ") -> " << a.out << "\n";
  return 0;
}

struct EvalArgs {
  std::string model;
  std::string corpus;
  std::string embeddings;
  std::string report;
};

int run_eval(const EvalArgs& a) {
  const auto model = ep::ensemble::load_ensemble(a.model);
  const auto corpus = ep::corpus::load_corpus(a.corpus, model.config.taxonomy);
  const auto table = ep::embedding::load_word2vec(a.embeddings);
  check_table(model, table);
  const auto report = ep::eval::evaluate_heldout(model, corpus, table);
  if (!a.report.empty()) write_text_file(a.report, report.to_json().dump(2) + "\n");
  std::cout << report.to_text();
  return 0;
}

struct ClassifyArgs {
  std::string model;
  std::string embeddings;
  std::string text;
};

int run_classify(const ClassifyArgs& a) {
  const auto model = ep::ensemble::load_ensemble(a.model);
  const auto table = ep::embedding::load_word2vec(a.embeddings);
  check_table(model, table);
  std::cout << ep::ensemble::to_json(ep::ensemble::classify(model, table, a.text)).dump() << "\n";
  return 0;
}

struct ServeArgs {
  std::string model;
  std::string embeddings;
  std::string log;
  std::string host = "127.0.0.1";
};

int run_serve(const ServeArgs& a) {
  const int port = ep::service::port_from_env();
  auto loaded = std::make_shared<ep::service::LoadedModel>(
      ep::service::LoadedModel{ep::ensemble::load_ensemble(a.model), ep::embedding::load_word2vec(a.embeddings)});
  check_table(loaded->ensemble, loaded->table);

  // Handle SIGINT/SIGTERM synchronously on this thread.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  ep::service::MessageService service(loaded, a.log.empty() ? std::nullopt : std::optional<std::filesystem::path>(a.log));
  ep::service::HttpServer server(service);
  const int bound = server.bind(a.host, port);
  std::cout << "listening on http://" << a.host << ":" << bound << "  (" << service.messages().size()
            << " messages replayed)" << std::endl;

  std::thread worker([&server] { server.run(); });
  int sig = 0;
  sigwait(&signals, &sig);
  std::cout << "shutting down" << std::endl;
  service.shutdown();
  server.stop();
  worker.join();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"emotionpush: emotion classification and push-notification server"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "generate a synthetic corpus and matching embeddings");
  s->add_option("--config", synth.config, "synthetic corpus config (JSON)")->check(CLI::ExistingFile);
  s->add_option("--out-corpus", synth.out_corpus, "output corpus (JSONL)")->required();
  s->add_option("--out-embeddings", synth.out_embeddings, "output embeddings (word2vec binary)")->required();
  s->add_option("--out-taxonomy", synth.out_taxonomy, "also write the taxonomy config");
  s->add_option("--seed", synth.seed, "overrides the config seed");

  TrainArgs train;
  auto* t = app.add_subcommand("train", "tune and train one classifier per label");
  t->add_option("--corpus", train.corpus, "corpus (JSONL)")->required()->check(CLI::ExistingFile);
  t->add_option("--embeddings", train.embeddings, "word2vec binary")->required()->check(CLI::ExistingFile);
  t->add_option("--taxonomy", train.taxonomy, "taxonomy config (default: shipped 40->7 map)")
      ->check(CLI::ExistingFile);
  t->add_option("--mode", train.mode, "coarse7 or fine40")->check(CLI::IsMember({"coarse7", "fine40"}));
  t->add_option("--grid", train.grid, "grid spec JSON {c, gamma, folds}")->check(CLI::ExistingFile);
  t->add_option("--out", train.out, "model directory")->required();
  t->add_option("--seed", train.seed, "sampling and fold seed");
  t->add_option("--n-pos", train.n_pos, "training positives per label");
  t->add_option("--n-neg", train.n_neg, "training negatives per label");
  t->add_option("--heldout", train.heldout, "held-out documents per label");
  t->add_option("--threads", train.threads, "worker threads (0 = all cores)");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "held-out AUC per label");
  e->add_option("--model", ev.model, "model directory")->required()->check(CLI::ExistingDirectory);
  e->add_option("--corpus", ev.corpus, "corpus (JSONL)")->required()->check(CLI::ExistingFile);
  e->add_option("--embeddings", ev.embeddings, "word2vec binary")->required()->check(CLI::ExistingFile);
  e->add_option("--report", ev.report, "write the report as JSON");

  ClassifyArgs cl;
  auto* c = app.add_subcommand("classify", "classify one text and print JSON");
  c->add_option("--model", cl.model, "model directory")->required()->check(CLI::ExistingDirectory);
  c->add_option("--embeddings", cl.embeddings, "word2vec binary")->required()->check(CLI::ExistingFile);
  c->add_option("--text", cl.text, "text to classify")->required();

  ServeArgs sv;
  auto* v = app.add_subcommand("serve", "run the HTTP server (port from EMOTIONPUSH_PORT, default 8087)");
  v->add_option("--model", sv.model, "model directory")->required()->check(CLI::ExistingDirectory);
  v->add_option("--embeddings", sv.embeddings, "word2vec binary")->required()->check(CLI::ExistingFile);
  v->add_option("--log", sv.log, "event log (JSONL), replayed on startup")->required();
  v->add_option("--host", sv.host, "bind address");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err) == 0 ? 0 : 1;
  }

  try {
    if (s->parsed()) return run_synth(synth);
    if (t->parsed()) return run_train(train);
    if (e->parsed()) return run_eval(ev);
    if (c->parsed()) return run_classify(cl);
    if (v->parsed()) return run_serve(sv);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
  return 1;
}
