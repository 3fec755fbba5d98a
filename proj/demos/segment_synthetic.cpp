// Trains a small FMG-Net on generated images and reports test Dice per class.
#include <cstdio>

#include "mgnets/segmetrics.hpp"
#include "mgnets/segnet.hpp"
#include "mgnets/synthdata.hpp"

int main() {
    using namespace mgnets;
    auto load = [](int count, std::uint64_t seed) {
        std::vector<Sample<float>> out;
        std::vector<LabelMask> truth;
        for (int i = 0; i < count; ++i) {
            const SynthCase c = generate_case(32, seed, i);
            out.push_back(make_sample<float>(LoadedCase{c.case_id, c.image, c.labels}));
            truth.push_back(c.labels);
        }
        return std::pair{out, truth};
    };
    const auto [train_set, train_truth] = load(64, 7);
    const auto [test_set, test_truth] = load(16, 8);

    Model<float> m = instantiate<float>(ArchSpec::make(Family::FMGNet, 3, 2, 1, kSynthClasses, 8), 7);
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.learning_rate = 1e-2;
    std::printf("%lld parameters\n", static_cast<long long>(m.num_parameters()));
    train(m, train_set, cfg, [](const LossEntry& e) {
        std::printf("epoch %2d  train %.4f  val %.4f\n", e.epoch, e.train_loss, e.val_loss);
    });

    double sum[3] = {};
    for (std::size_t i = 0; i < test_set.size(); ++i) {
        const auto rows = evaluate_classes(predict(m, test_set[i].image), test_truth[i], default_class_map());
        for (int k = 0; k < 3; ++k) sum[k] += rows[k].dice;
    }
    const auto names = default_class_map();
    for (int k = 0; k < 3; ++k) std::printf("test dice %-5s %.3f\n", names[k].name.c_str(), sum[k] / test_set.size());
}
