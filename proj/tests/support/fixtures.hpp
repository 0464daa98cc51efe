#pragma once

#include <filesystem>
#include <memory>
#include <random>
#include <string>

#include "emotionpush/corpus.hpp"
#include "emotionpush/ensemble.hpp"
#include "emotionpush/service.hpp"

namespace fixtures {

namespace ep = emotionpush;

// 40-label synthetic corpus, 25 docs per label.
inline const ep::corpus::SynthOutput& small_synth() {
  static const ep::corpus::SynthOutput out = [] {
    ep::corpus::SynthConfig cfg;
    cfg.seed = 11;
    return ep::corpus::synth_corpus(cfg);
  }();
  return out;
}

inline ep::ensemble::EnsembleModel train_small(ep::ensemble::Mode mode) {
  const auto& s = small_synth();
  ep::ensemble::TrainPlan plan;
  plan.sampling.n_pos = 15;
  plan.sampling.n_neg = 15;
  plan.sampling.heldout_per_label = 5;
  plan.sampling.seed = 3;
  plan.defaults.c = 2.0;
  plan.defaults.gamma = 0.5;
  return ep::ensemble::train_ensemble(s.corpus, s.table, s.taxonomy, mode, plan);
}

// Coarse-mode model over the shipped taxonomy, trained once per process.
inline std::shared_ptr<const ep::service::LoadedModel> coarse_model() {
  static const auto model = std::make_shared<const ep::service::LoadedModel>(
      ep::service::LoadedModel{train_small(ep::ensemble::Mode::kCoarse), small_synth().table});
  return model;
}

// Texts mixing signature tokens, noise tokens and out-of-vocabulary words.
inline std::vector<std::string> random_texts(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < count; ++i) {
    std::string text;
    const int words = static_cast<int>(gen() % 12);
    for (int w = 0; w < words; ++w) {
      switch (gen() % 3) {
        case 0: text += ep::corpus::signature_token(gen() % 40, gen() % 20); break;
        case 1: text += ep::corpus::noise_token(gen() % 2000); break;
        default: text += "oov" + std::to_string(gen() % 100); break;
      }
      text += w % 4 == 3 ? ", " : " ";
    }
    out.push_back(text);
  }
  return out;
}

// Scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;
  TempDir() {
    std::random_device rd;
    path = std::filesystem::temp_directory_path() / ("emotionpush-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

}  // namespace fixtures
