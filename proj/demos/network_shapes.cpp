// Level schedules and parameter counts of the three families at depth 2..5.
#include <cstdio>

#include "mgnets/cyclegraph.hpp"

int main() {
    using namespace mgnets;
    for (Family f : {Family::UNet, Family::FMGNet, Family::WNet}) {
        std::printf("%s\n", to_string(f));
        for (int d = 2; d <= 5; ++d) {
            const ArchSpec spec = ArchSpec::make(f, d, 2, 1, 4, 32);
            const auto g = build_graph(spec);
            std::printf("  grids %d  blocks %3zu  params %9lld  levels", d, g.nodes.size(),
                        static_cast<long long>(count_parameters(g, spec)));
            for (int l : schedule(f, d).levels) std::printf(" %d", l);
            std::printf("\n");
        }
    }
}
