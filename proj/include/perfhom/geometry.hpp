#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace perfhom {

enum class NodeClass : std::uint8_t { Fluid, HoleInterior, HoleBoundary, OuterBoundary };

/// Outward normal directions at a hole-boundary node, pointing into the hole.
/// Corner nodes carry two bits.
enum NormalBit : std::uint8_t {
    NormalPosX = 1,
    NormalNegX = 2,
    NormalPosY = 4,
    NormalNegY = 8,
};

/// Unit periodicity cell [0,1)^2 with a centered axis-aligned square hole of
/// side `hole_fraction`, discretized with `resolution` intervals per side.
/// The hole boundary must land exactly on grid lines: resolution*(1-hole_fraction)/2
/// has to be a positive integer, which also leaves at least one fluid layer
/// between the hole and the cell boundary.
struct CellSpec {
    double hole_fraction = 0.0;  // rho in [0,1)
    int resolution = 8;          // m, grid intervals per cell side

    void validate() const;  // throws ConfigError

    /// Grid offset of the hole's low edge: m*(1-rho)/2.
    int hole_offset() const;
    /// Hole side in grid intervals: rho*m (0 when there is no hole).
    int hole_span() const;
};

struct CellGrid {
    CellSpec spec;
    int m = 0;
    double spacing = 0.0;  // 1/m
    double theta = 1.0;    // fluid area fraction, 1 - rho^2
    double lambda = 0.0;   // hole perimeter density, 4 rho

    /// m*m nodes at (i/m, j/m), index j*m + i, periodic wraparound.
    std::vector<NodeClass> node_class;

    /// Material quadrature weight per node: h^2 on fluid, h^2/2 on hole edges,
    /// 3h^2/4 on hole corners, 0 inside the hole. Sums to theta exactly.
    std::vector<double> material_weight;

    int fluid_count = 0;
    int hole_boundary_count = 0;
    int hole_interior_count = 0;

    int index(int i, int j) const {
        const int ii = ((i % m) + m) % m;
        const int jj = ((j % m) + m) % m;
        return jj * m + ii;
    }
    NodeClass at(int i, int j) const { return node_class[static_cast<std::size_t>(index(i, j))]; }
    bool in_hole_closure(int i, int j) const {
        const NodeClass c = at(i, j);
        return c == NodeClass::HoleInterior || c == NodeClass::HoleBoundary;
    }
};

CellGrid build_cell_grid(const CellSpec& spec);

/// The unit square D perforated with one hole per eps-cell, eps = 1/cells_per_side,
/// discretized with spacing h = eps/m. Outer boundary nodes carry homogeneous
/// Dirichlet data and are not degrees of freedom; fluid and hole-boundary nodes
/// are enumerated by compact DOF maps.
struct PerforatedGrid {
    CellSpec cell;
    int cells_per_side = 0;  // N_eps
    double epsilon = 0.0;    // 1/N_eps
    int n = 0;               // grid intervals per side of D: N_eps * m
    double spacing = 0.0;    // h = eps/m
    double theta = 1.0;
    double lambda = 0.0;

    /// (n+1)*(n+1) nodes at (i*h, j*h), index j*(n+1) + i.
    std::vector<NodeClass> node_class;

    std::vector<int> fluid_dof;     // node -> fluid DOF index, -1 elsewhere
    std::vector<int> boundary_dof;  // node -> hole-boundary DOF index, -1 elsewhere
    std::vector<int> fluid_nodes;   // fluid DOF -> node
    std::vector<int> boundary_nodes;// hole-boundary DOF -> node

    /// Per hole-boundary DOF: surface measure s_b (sum of adjacent boundary
    /// half-edges; h at every node of a grid-aligned square hole) and the
    /// outward normal direction bits.
    std::vector<double> surface_measure;
    std::vector<std::uint8_t> normal_bits;

    /// Material quadrature weight per node, as in CellGrid; trapezoid weights
    /// on the outer boundary (where fields vanish anyway). The weights over any
    /// full eps-cell sum to theta*eps^2 exactly.
    std::vector<double> bulk_weight;

    int node_index(int i, int j) const { return j * (n + 1) + i; }
    double x_of(int i) const { return spacing * i; }
    double y_of(int j) const { return spacing * j; }
    NodeClass at(int i, int j) const {
        return node_class[static_cast<std::size_t>(node_index(i, j))];
    }

    int fluid_count() const { return static_cast<int>(fluid_nodes.size()); }
    int boundary_count() const { return static_cast<int>(boundary_nodes.size()); }
    int dof_count() const { return fluid_count() + boundary_count(); }
};

PerforatedGrid build_perforated_grid(const CellSpec& spec, int cells_per_side,
                                     std::size_t max_nodes = std::size_t(1) << 26);

/// Zero extension of (bulk, trace) DOF values to the full grid: fluid and
/// hole-boundary nodes keep their values, everything else is 0. The material
/// L2 norm (see l2_material_norm) is preserved exactly.
std::vector<double> zero_extend(std::span<const double> bulk, std::span<const double> trace,
                                const PerforatedGrid& grid);

/// Discrete L2(D) norm of a full-grid field under the material quadrature.
double l2_material_norm(std::span<const double> full_field, const PerforatedGrid& grid);

/// Cell-average projection of a node field on a fine uniform grid with
/// `fine_intervals` per side onto a coarse grid of `coarse_intervals` cells.
/// Requires coarse_intervals | fine_intervals. Preserves the trapezoid mean of
/// the field exactly; the output has one value per coarse cell.
std::vector<double> restrict_to_common_grid(std::span<const double> node_field,
                                            int fine_intervals, int coarse_intervals);

/// Trapezoid mean of a node field over the unit square (the mean preserved by
/// restrict_to_common_grid).
double trapezoid_mean(std::span<const double> node_field, int intervals);

/// One-line CSV summary: counts per class, theta, lambda, epsilon, h.
std::string grid_summary_csv(const PerforatedGrid& grid);

}  // namespace perfhom
