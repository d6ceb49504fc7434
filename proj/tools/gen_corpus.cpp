#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "nrp/synth_corpus.hpp"

// Writes a deterministic synthetic corpus (train/valid/test token files)
// with learnable successor structure, for experiments at reduced scale.
int main(int argc, char** argv) {
  CLI::App app{"generate a synthetic token corpus"};
  std::string out_dir = "data/synth";
  std::size_t types = 2500;
  std::size_t train_tokens = 50000;
  std::size_t valid_tokens = 5000;
  std::size_t test_tokens = 5000;
  uint64_t seed = 1;
  double jump_p = 0.3;
  app.add_option("--out-dir", out_dir, "output directory");
  app.add_option("--types", types, "word type count")->check(CLI::PositiveNumber);
  app.add_option("--train-tokens", train_tokens)->check(CLI::PositiveNumber);
  app.add_option("--valid-tokens", valid_tokens)->check(CLI::PositiveNumber);
  app.add_option("--test-tokens", test_tokens)->check(CLI::PositiveNumber);
  app.add_option("--seed", seed);
  app.add_option("--jump-p", jump_p, "probability of a frequency-skewed jump")
      ->check(CLI::Range(0.0, 1.0));
  CLI11_PARSE(app, argc, argv);

  try {
    const nrp::SynthCorpus corpus = nrp::generate_synth_corpus(
        types, train_tokens, valid_tokens, test_tokens, seed, jump_p);
    std::filesystem::create_directories(out_dir);
    nrp::write_token_file(out_dir + "/train.txt", corpus.train);
    nrp::write_token_file(out_dir + "/valid.txt", corpus.valid);
    nrp::write_token_file(out_dir + "/test.txt", corpus.test);
    std::cout << "wrote " << corpus.train.size() << "/" << corpus.valid.size() << "/"
              << corpus.test.size() << " tokens to " << out_dir << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
