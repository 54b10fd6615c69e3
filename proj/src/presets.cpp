#include "lgq/presets.hpp"

#include "lgq/errors.hpp"

#include <numbers>

namespace lgq::presets {

namespace {

constexpr double kObservedEta = 0.5;
constexpr double kObservedTheta = 3.0 * std::numbers::pi / 8.0;
constexpr double kUnobservedTheta = -std::numbers::pi / 8.0;

CovMatrix scaled(double prefactor, double v11, double v12, double v22) {
    Matrix m(2, 2);
    m << v11, v12, v12, v22;
    return CovMatrix(Matrix(prefactor * m));
}

}  // namespace

SystemModel opo_model(double hbar) {
    Matrix a = Matrix::Zero(2, 2);
    a(1, 1) = -2.0;
    return SystemModel(1, hbar, a, hbar * Matrix::Identity(2, 2));
}

Unravelling opo_observed(const SystemModel& model) {
    return make_homodyne(kObservedEta, kObservedTheta, 0, model);
}

Unravelling opo_unobserved_homodyne(const SystemModel& model) {
    return make_homodyne(1.0 - kObservedEta, kUnobservedTheta, 0, model);
}

Unravelling opo_unobserved_heterodyne(const SystemModel& model) {
    return make_heterodyne(1.0 - kObservedEta, 0.0, 0, model);
}

ModelFile opo_model_file(double hbar) {
    nlohmann::json doc = {
        {"N", 1},
        {"hbar", hbar},
        {"A", {{0.0, 0.0}, {0.0, -2.0}}},
        {"D", {{hbar, 0.0}, {0.0, hbar}}},
        {"unravellings",
         {{"alice", {{"type", "homodyne"}, {"eta", kObservedEta}, {"theta", kObservedTheta}}},
          {"homodyne:-pi/8", {{"type", "homodyne"}, {"eta", 1.0 - kObservedEta}, {"theta", kUnobservedTheta}}},
          {"heterodyne:balanced", {{"type", "heterodyne"}, {"eta", 1.0 - kObservedEta}, {"theta", 0.0}}}}},
    };
    return parse_model(doc);
}

CovMatrix opo_fixture(char which, double hbar) {
    const double half = hbar / 2.0;
    switch (which) {
        case 'a': return scaled(half, 2.41, 0.0, 0.41);
        case 'b': return scaled(half, 3.18, 0.49, 0.39);
        case 'c': return scaled(hbar / 3.0, 5.02, -0.50, 0.25);
        case 'C': return scaled(half, 5.02, -0.50, 0.25);
        case 'd': return scaled(half, 1.93, 0.79, 0.84);
        default: throw DomainError(std::string("unknown OPO fixture '") + which + "'");
    }
}

CovMatrix opo_fixture(const std::string& name, double hbar) {
    if (name == "c-half") {
        return opo_fixture('C', hbar);
    }
    if (name.size() == 1 && name != "C") {
        return opo_fixture(name.front(), hbar);
    }
    throw DomainError("unknown OPO fixture '" + name + "' (expected a, b, c, c-half, d)");
}

}  // namespace lgq::presets
