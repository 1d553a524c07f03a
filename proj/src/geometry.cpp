#include "perfhom/geometry.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "perfhom/errors.hpp"

namespace perfhom {

void CellSpec::validate() const {
    if (!(hole_fraction >= 0.0) || hole_fraction >= 1.0) {
        throw ConfigError("hole fraction rho must lie in [0,1), got " +
                          std::to_string(hole_fraction));
    }
    if (resolution < 1) {
        throw ConfigError("cell resolution m must be positive, got " +
                          std::to_string(resolution));
    }
    const double t = resolution * (1.0 - hole_fraction) / 2.0;
    const double d = std::round(t);
    if (std::abs(t - d) > 1e-9 || d < 1.0) {
        throw ConfigError("hole misaligned: m*(1-rho)/2 = " + std::to_string(t) +
                          " must be a positive integer (rho=" + std::to_string(hole_fraction) +
                          ", m=" + std::to_string(resolution) + ")");
    }
    if (hole_fraction > 0.0 && resolution - 2 * static_cast<int>(d) < 1) {
        throw ConfigError("hole fraction rho=" + std::to_string(hole_fraction) +
                          " does not span a grid interval at m=" + std::to_string(resolution));
    }
}

int CellSpec::hole_offset() const {
    return static_cast<int>(std::round(resolution * (1.0 - hole_fraction) / 2.0));
}

int CellSpec::hole_span() const {
    return hole_fraction > 0.0 ? resolution - 2 * hole_offset() : 0;
}

namespace {

// Classification of a node of the periodicity cell by its local index in [0,m).
NodeClass classify_cell_node(int li, int lj, int d, int s) {
    if (s == 0) return NodeClass::Fluid;
    const int hi = d + s;  // high edge of the hole in grid indices
    if (li < d || li > hi || lj < d || lj > hi) return NodeClass::Fluid;
    if (li == d || li == hi || lj == d || lj == hi) return NodeClass::HoleBoundary;
    return NodeClass::HoleInterior;
}

bool is_hole_corner(int li, int lj, int d, int s) {
    const int hi = d + s;
    return (li == d || li == hi) && (lj == d || lj == hi);
}

double material_share(NodeClass c, int li, int lj, int d, int s) {
    switch (c) {
        case NodeClass::Fluid: return 1.0;
        case NodeClass::HoleInterior: return 0.0;
        case NodeClass::HoleBoundary: return is_hole_corner(li, lj, d, s) ? 0.75 : 0.5;
        case NodeClass::OuterBoundary: return 0.0;  // handled separately
    }
    return 0.0;
}

std::uint8_t hole_normals(int li, int lj, int d, int s) {
    const int hi = d + s;
    std::uint8_t bits = 0;
    if (li == d) bits |= NormalPosX;
    if (li == hi) bits |= NormalNegX;
    if (lj == d) bits |= NormalPosY;
    if (lj == hi) bits |= NormalNegY;
    return bits;
}

}  // namespace

CellGrid build_cell_grid(const CellSpec& spec) {
    spec.validate();
    CellGrid grid;
    grid.spec = spec;
    grid.m = spec.resolution;
    grid.spacing = 1.0 / grid.m;
    grid.theta = 1.0 - spec.hole_fraction * spec.hole_fraction;
    grid.lambda = 4.0 * spec.hole_fraction;

    const int d = spec.hole_offset();
    const int s = spec.hole_span();
    const double hc2 = grid.spacing * grid.spacing;

    grid.node_class.resize(static_cast<std::size_t>(grid.m) * grid.m);
    grid.material_weight.resize(grid.node_class.size());
    for (int j = 0; j < grid.m; ++j) {
        for (int i = 0; i < grid.m; ++i) {
            const NodeClass c = classify_cell_node(i, j, d, s);
            grid.node_class[static_cast<std::size_t>(j) * grid.m + i] = c;
            grid.material_weight[static_cast<std::size_t>(j) * grid.m + i] =
                hc2 * material_share(c, i, j, d, s);
            switch (c) {
                case NodeClass::Fluid: ++grid.fluid_count; break;
                case NodeClass::HoleBoundary: ++grid.hole_boundary_count; break;
                case NodeClass::HoleInterior: ++grid.hole_interior_count; break;
                default: break;
            }
        }
    }
    return grid;
}

PerforatedGrid build_perforated_grid(const CellSpec& spec, int cells_per_side,
                                     std::size_t max_nodes) {
    spec.validate();
    if (cells_per_side < 1) {
        throw ConfigError("cells_per_side must be positive, got " +
                          std::to_string(cells_per_side));
    }
    PerforatedGrid grid;
    grid.cell = spec;
    grid.cells_per_side = cells_per_side;
    grid.epsilon = 1.0 / cells_per_side;
    grid.n = cells_per_side * spec.resolution;
    grid.spacing = grid.epsilon / spec.resolution;
    grid.theta = 1.0 - spec.hole_fraction * spec.hole_fraction;
    grid.lambda = 4.0 * spec.hole_fraction;

    const std::size_t side = static_cast<std::size_t>(grid.n) + 1;
    if (side * side > max_nodes) {
        throw ConfigError("perforated grid would have " + std::to_string(side * side) +
                          " nodes, above the cap of " + std::to_string(max_nodes));
    }

    const int m = spec.resolution;
    const int d = spec.hole_offset();
    const int s = spec.hole_span();
    const double h2 = grid.spacing * grid.spacing;

    grid.node_class.resize(side * side);
    grid.bulk_weight.resize(side * side);
    grid.fluid_dof.assign(side * side, -1);
    grid.boundary_dof.assign(side * side, -1);

    for (int j = 0; j <= grid.n; ++j) {
        for (int i = 0; i <= grid.n; ++i) {
            const std::size_t idx = static_cast<std::size_t>(grid.node_index(i, j));
            if (i == 0 || j == 0 || i == grid.n || j == grid.n) {
                grid.node_class[idx] = NodeClass::OuterBoundary;
                const bool corner = (i == 0 || i == grid.n) && (j == 0 || j == grid.n);
                grid.bulk_weight[idx] = corner ? 0.25 * h2 : 0.5 * h2;
                continue;
            }
            const int li = i % m;
            const int lj = j % m;
            const NodeClass c = classify_cell_node(li, lj, d, s);
            grid.node_class[idx] = c;
            grid.bulk_weight[idx] = h2 * material_share(c, li, lj, d, s);
            if (c == NodeClass::Fluid) {
                grid.fluid_dof[idx] = static_cast<int>(grid.fluid_nodes.size());
                grid.fluid_nodes.push_back(static_cast<int>(idx));
            } else if (c == NodeClass::HoleBoundary) {
                grid.boundary_dof[idx] = static_cast<int>(grid.boundary_nodes.size());
                grid.boundary_nodes.push_back(static_cast<int>(idx));
                grid.surface_measure.push_back(grid.spacing);
                grid.normal_bits.push_back(hole_normals(li, lj, d, s));
            }
        }
    }
    return grid;
}

std::vector<double> zero_extend(std::span<const double> bulk, std::span<const double> trace,
                                const PerforatedGrid& grid) {
    if (bulk.size() != grid.fluid_nodes.size() || trace.size() != grid.boundary_nodes.size()) {
        throw std::invalid_argument("zero_extend: DOF value lengths do not match the grid");
    }
    std::vector<double> full(grid.node_class.size(), 0.0);
    for (std::size_t k = 0; k < bulk.size(); ++k) {
        full[static_cast<std::size_t>(grid.fluid_nodes[k])] = bulk[k];
    }
    for (std::size_t k = 0; k < trace.size(); ++k) {
        full[static_cast<std::size_t>(grid.boundary_nodes[k])] = trace[k];
    }
    return full;
}

double l2_material_norm(std::span<const double> full_field, const PerforatedGrid& grid) {
    if (full_field.size() != grid.bulk_weight.size()) {
        throw std::invalid_argument("l2_material_norm: field length does not match the grid");
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < full_field.size(); ++k) {
        if (grid.node_class[k] == NodeClass::Fluid || grid.node_class[k] == NodeClass::HoleBoundary) {
            acc += grid.bulk_weight[k] * full_field[k] * full_field[k];
        }
    }
    return std::sqrt(acc);
}

std::vector<double> restrict_to_common_grid(std::span<const double> node_field,
                                            int fine_intervals, int coarse_intervals) {
    const std::size_t side = static_cast<std::size_t>(fine_intervals) + 1;
    if (node_field.size() != side * side) {
        throw std::invalid_argument("restrict_to_common_grid: field length does not match grid");
    }
    if (coarse_intervals < 1 || fine_intervals % coarse_intervals != 0) {
        throw std::invalid_argument("restrict_to_common_grid: coarse resolution " +
                                    std::to_string(coarse_intervals) + " does not divide " +
                                    std::to_string(fine_intervals));
    }
    const int r = fine_intervals / coarse_intervals;
    std::vector<double> coarse(static_cast<std::size_t>(coarse_intervals) * coarse_intervals, 0.0);
    const double inv = 1.0 / (4.0 * r * r);
    for (int cj = 0; cj < fine_intervals; ++cj) {
        for (int ci = 0; ci < fine_intervals; ++ci) {
            const std::size_t a = static_cast<std::size_t>(cj) * side + ci;
            const double cell_sum =
                node_field[a] + node_field[a + 1] + node_field[a + side] + node_field[a + side + 1];
            coarse[static_cast<std::size_t>(cj / r) * coarse_intervals + (ci / r)] +=
                cell_sum * inv;
        }
    }
    return coarse;
}

double trapezoid_mean(std::span<const double> node_field, int intervals) {
    const std::size_t side = static_cast<std::size_t>(intervals) + 1;
    if (node_field.size() != side * side) {
        throw std::invalid_argument("trapezoid_mean: field length does not match grid");
    }
    double acc = 0.0;
    for (int cj = 0; cj < intervals; ++cj) {
        for (int ci = 0; ci < intervals; ++ci) {
            const std::size_t a = static_cast<std::size_t>(cj) * side + ci;
            acc += node_field[a] + node_field[a + 1] + node_field[a + side] +
                   node_field[a + side + 1];
        }
    }
    return acc / (4.0 * intervals * intervals);
}

std::string grid_summary_csv(const PerforatedGrid& grid) {
    int outer = 0, interior = 0;
    for (const NodeClass c : grid.node_class) {
        if (c == NodeClass::OuterBoundary) ++outer;
        if (c == NodeClass::HoleInterior) ++interior;
    }
    std::ostringstream os;
    os << "fluid,hole_boundary,hole_interior,outer_boundary,theta,lambda,epsilon,h\n";
    os.precision(17);
    os << grid.fluid_count() << ',' << grid.boundary_count() << ',' << interior << ',' << outer
       << ',' << grid.theta << ',' << grid.lambda << ',' << grid.epsilon << ',' << grid.spacing
       << '\n';
    return os.str();
}

}  // namespace perfhom
