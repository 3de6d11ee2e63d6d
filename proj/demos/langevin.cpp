// Magnetization of a classical spin in a unit field, by quadrature and by Metropolis.
#include "kmslab/kmslab.hpp"

#include <cstdio>

int main() {
    using namespace kmslab;
    Model field = bundled_model("field");
    auto eta = Configuration::fixed(ManifoldKind::Sphere2, Window::box({1}), 1,
                                    [](const SiteIndex&) { return north_pole(); });
    Observable sz = Observable::parse("sz(0)", ManifoldKind::Sphere2, 1);

    GibbsKernel kernel{field.phi, {SiteIndex{0}}};
    Estimate q = gibbs_expectation(kernel, sz, eta);
    std::printf("quadrature  <sz> = %.12f  (coth 1 - 1 = %.12f)\n", q.value, 1.0 / std::tanh(1.0) - 1.0);

    kernel.engine = EngineKind::Mcmc;
    kernel.mcmc.sweeps = 100000;
    Estimate m = gibbs_expectation(kernel, sz, eta);
    std::printf("metropolis  <sz> = %.5f +- %.5f\n", m.value, m.error);

    Observable sx = Observable::parse("sx(0)", ManifoldKind::Sphere2, 1);
    Observable sy = Observable::parse("sy(0)", ManifoldKind::Sphere2, 1);
    kernel.engine = EngineKind::Quadrature;
    std::printf("KMS residual for (sx, sy): %.3e\n", kms_residual(kernel, sx, sy, eta).value);
}
