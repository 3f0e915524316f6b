// Minimal library walkthrough on one synthetic image: jitter prompts,
// query the synthetic backend, fuse, and report metrics and uncertainty.

#include <cstdio>

#include "samu/samu.hpp"

int main() {
    using namespace samu;

    const SynthSample s = make_synthetic(0, 7);
    const Image noisy = add_gaussian_noise(s.image, 0.10, 1);

    OracleConfig oc;
    oc.gt = s.mask;
    oc.seed = 1;
    SyntheticOracle backend(oc);

    const BoxPrompt box = gt_bounding_box(s.mask);
    PromptConfig pc;
    pc.seed = 1;
    const auto boxes = jitter_boxes(box, pc, s.mask.width(), s.mask.height());

    std::vector<ProbabilityMap> maps;
    for (const auto& b : boxes) maps.push_back(backend.predict(noisy, b));
    const PredictionSet set(std::move(maps), boxes);
    const ProbabilityMap fused = fuse_mean(set);

    const MetricReport single = evaluate(backend.predict(noisy, box), s.mask);
    const MetricReport multi = evaluate(fused, s.mask);
    std::printf("single box: dice %.4f  ece %.4f  sm %.4f  wfm %.4f\n", single.dice, single.ece, single.sm,
                single.wfm);
    std::printf("%zu boxes:   dice %.4f  ece %.4f  sm %.4f  wfm %.4f\n", set.m(), multi.dice, multi.ece, multi.sm,
                multi.wfm);
    for (auto kind : {UncertaintyKind::PredictiveEntropy, UncertaintyKind::ExpectedEntropy, UncertaintyKind::Variance})
        std::printf("mean %-10s %.4f\n", std::string(to_string(kind)).c_str(), uncertainty(set, kind).mean());
    return 0;
}
