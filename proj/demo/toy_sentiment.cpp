// Trains a small model on the bundled toy sentiment set and prints what it
// predicts for the held-out sentences.
//
//   toy_sentiment [data_dir] [epochs]

#include <cstdio>
#include <iostream>
#include <string>

#include "sata/sata.hpp"

using namespace sata;

int main(int argc, char** argv) {
  const std::string dir = argc > 1 ? argv[1] : std::string(SATA_SOURCE_DIR) + "/data/toy";
  const std::size_t epochs = argc > 2 ? std::stoul(argv[2]) : 60;
  try {
    const treebank::ClusterMap map = treebank::ClusterMap::default_map();
    const treebank::Dataset train = treebank::load_dataset(dir + "/train.jsonl", map);
    const treebank::Dataset dev = treebank::load_dataset(dir + "/dev.jsonl", map);

    ModelConfig cfg;
    cfg.encoder.d_w = 16;
    cfg.encoder.d_h = 32;
    cfg.encoder.d_t = 8;
    cfg.head.d_s = 32;
    cfg.head.num_classes = 2;
    SataModel model = SataModel::create(cfg, WordVocab::from_dataset(train), map, 7);

    TrainConfig tc;
    tc.batch_size = 8;
    tc.epochs = epochs;
    tc.seed = 7;
    RunConfig rc{cfg, tc, {}};
    nlohmann::json meta = to_json(rc);
    meta.erase("paths");

    std::cout << train.size() << " training and " << dev.size() << " dev sentences, "
              << total_params(count_params(cfg)) << " trainable parameters\n";
    Trainer trainer(model, tc, meta);
    trainer.fit(train, &dev, [](const EpochMetrics& m, Trainer&) {
      if (m.epoch % 10 == 0) {
        std::printf("epoch %3zu  loss %.4f  train %.3f  dev %.3f\n", m.epoch, m.train_loss, m.train_acc,
                    m.dev_acc.value_or(0.0));
      }
      return true;
    });

    const EvalResult r = evaluate(model, dev);
    std::printf("dev accuracy %.3f (%zu/%zu)\n\n", r.accuracy, r.correct, r.total);
    for (const treebank::Example& ex : dev.examples) {
      Tape tape;
      const ExampleForward f = forward_example(tape, ex, model, ForwardMode::eval());
      const Tensor p = classify(f.head_input, model.classifier).value();
      std::string text;
      for (const std::string& t : ex.sentence.tokens) text += (text.empty() ? "" : " ") + t;
      std::printf("  gold %d  p(pos) %.3f  %s\n", ex.label, p[1], text.c_str());
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
