// Deterministic backend speaking the clustop subprocess protocol. Model ids
// look like `fixture:markers=a,b,c;seed=7`; see clustop/fixture.hpp.
#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "clustop/backend.hpp"
#include "clustop/cluster.hpp"
#include "clustop/fixture.hpp"

namespace fs = std::filesystem;
using namespace clustop;

namespace {

void fail_if_requested(const FixtureModel& m, const std::string& op) {
  if (m.options.fail_op == op) throw std::runtime_error("fixture asked to fail during " + op);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("clustop fixture backend");
  bool capabilities = false;
  app.add_flag("--capabilities", capabilities, "print the protocol handshake");

  std::string corpus, model, out, labels, out_model, markers;
  int epochs = 20, batch = 16, per_class = 40;
  double lr = 2e-5;
  std::uint64_t seed = 7;

  auto* embed = app.add_subcommand("embed", "write embeddings and tokens");
  embed->add_option("--corpus", corpus)->required();
  embed->add_option("--model", model)->required();
  embed->add_option("--out", out)->required();

  auto* attn = app.add_subcommand("attn", "write beta profiles");
  attn->add_option("--corpus", corpus)->required();
  attn->add_option("--model", model)->required();
  attn->add_option("--out", out)->required();

  auto* finetune = app.add_subcommand("finetune", "write an enhanced model directory");
  finetune->add_option("--corpus", corpus)->required();
  finetune->add_option("--labels", labels)->required();
  finetune->add_option("--model", model)->required();
  finetune->add_option("--epochs", epochs);
  finetune->add_option("--lr", lr);
  finetune->add_option("--batch", batch);
  finetune->add_option("--out-model", out_model)->required();

  auto* make = app.add_subcommand("make-corpus", "write a planted corpus and its labels");
  make->add_option("--markers", markers, "comma-separated marker words")->required();
  make->add_option("--per-class", per_class, "documents per marker");
  make->add_option("--seed", seed, "generator seed");
  make->add_option("--out", out, "corpus JSONL")->required();
  make->add_option("--labels", labels, "labels JSONL")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (capabilities) {
      std::cout << R"({"protocol":1,"ops":["embed","attn","finetune"]})" << "\n";
      return 0;
    }
    if (embed->parsed()) {
      const FixtureModel m = resolve_fixture_model(model);
      fail_if_requested(m, "embed");
      const Corpus c = fixture_tokenized(load_corpus(corpus));
      write_ctem(fixture_embed(c, m.stage, m.options), out);
      save_tokens(c, Backend::tokens_path_for(out));
    } else if (attn->parsed()) {
      const FixtureModel m = resolve_fixture_model(model);
      fail_if_requested(m, "attn");
      write_beta_profiles(fixture_attention(fixture_tokenized(load_corpus(corpus)), m.options), out);
    } else if (finetune->parsed()) {
      const FixtureModel m = resolve_fixture_model(model);
      fail_if_requested(m, "finetune");
      if (!(lr > 0) || batch < 1) throw std::runtime_error("bad fine-tune hyperparameters");
      fixture_finetune(load_corpus(corpus), labels, m, epochs, out_model);
    } else if (make->parsed()) {
      std::vector<std::string> list;
      std::string cur;
      for (char ch : markers + ",") {
        if (ch == ',') {
          if (!cur.empty()) list.push_back(cur);
          cur.clear();
        } else {
          cur += ch;
        }
      }
      const PlantedCorpus planted = make_planted_corpus(list, static_cast<std::size_t>(per_class), seed);
      save_corpus(planted.corpus, out);
      write_assignment(make_assignment(planted.classes, "planted", {}), planted.corpus, labels);
    } else {
      std::cerr << app.help();
      return 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "fixture backend: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
