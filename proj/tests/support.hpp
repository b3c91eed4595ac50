#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "artifact/lorenz.hpp"
#include "artifact/plug_atlas.hpp"
#include "artifact/plug_crossing.hpp"
#include "artifact/rp2.hpp"
#include "artifact/s3.hpp"

namespace testing_support {

using namespace artifact;

struct Bundled {
  std::string name;
  std::shared_ptr<VectorFieldSpec> f;
};

inline std::vector<Bundled> bundled_fields() {
  LorenzParams L;
  PlugParams P;
  RP2Params R;
  return {{"lorenz", build_lorenz(L)},
          {"lorenz_reversed", build_lorenz_reversed(L)},
          {"plug", build_plug(P)},
          {"plug_completion", build_plug(P, true)},
          {"plug_quotient", build_plug_quotient(P)},
          {"rp2", build_rp2_field(R)},
          {"s3", build_S3_field(L, &P)}};
}

// Uniform point of a chart that is inside the chart with margin `inset`
// (relative to the box) and not closer than 1e-3 to a singularity.
inline ChartPoint random_point(const VectorFieldSpec& f, std::mt19937_64& rng, double inset = 0.1) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const auto& charts = f.atlas().charts();
  for (;;) {
    const Chart& c = charts[rng() % charts.size()];
    if (!f.has_rule(c.id)) continue;
    Vec x(c.dim);
    for (int i = 0; i < c.dim; ++i) {
      double w = c.hi(i) - c.lo(i);
      x(i) = c.lo(i) + w * (inset + (1.0 - 2.0 * inset) * U(rng));
    }
    if (!c.contains(x)) continue;
    if (f.eval({c.id, x}).norm() < 1e-3) continue;
    return {c.id, x};
  }
}

}  // namespace testing_support
