#pragma once

// Reference evaluation of the single-stage detector training loss
//
//   L = L_box + L_cls + L_obj
//
// over small explicit grids. There is no network: predictions and targets are
// plain arrays, which makes every term and its gradient directly checkable.

#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

namespace marinex::yolo {

inline constexpr double kProbFloor = 1e-12;

struct Box {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
  double conf = 0.0;
};

struct TargetBox {
  bool responsible = false;  // I_obj for this (cell, slot)
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
  double conf = 0.0;
};

struct GridShape {
  int grid_size = 1;       // S, cells per side
  int boxes_per_cell = 1;  // B
  int num_classes = 1;     // C

  int cells() const { return grid_size * grid_size; }
  int box_count() const { return cells() * boxes_per_cell; }
  bool operator==(const GridShape&) const = default;
};

// Boxes are stored cell-major: index = cell * B + slot. Class probabilities
// are per cell: index = cell * C + class.
struct GridPrediction {
  GridShape shape;
  std::vector<Box> boxes;
  std::vector<double> class_probs;

  static GridPrediction zeros(const GridShape& shape);
  // Number of scalars visible to the gradient: 5 per box + C per cell.
  std::size_t parameter_count() const;
  std::vector<double> flatten() const;
  void assign(const std::vector<double>& flat);
};

struct GroundTruth {
  GridShape shape;
  std::vector<TargetBox> boxes;
  std::vector<double> class_probs;

  static GroundTruth zeros(const GridShape& shape);
};

struct LossWeights {
  double lambda_coord = 1.0;
  double lambda_class = 1.0;
  double lambda_obj = 1.0;
  double lambda_noobj = 1.0;
};

struct LossBreakdown {
  double box = 0.0;
  double cls = 0.0;
  double obj = 0.0;
  double total = 0.0;
};

// Shape checks only; throws ValidationError on mismatch.
void check_shapes(const GridPrediction& pred, const GroundTruth& gt);
// Value invariants (extents >= 0, confidences and probabilities in range,
// non-negative weights, class rows of responsible cells summing to 1).
void validate(const GridPrediction& pred, const GroundTruth& gt, const LossWeights& w);

double box_loss(const GridPrediction& pred, const GroundTruth& gt, const LossWeights& w);
double cls_loss(const GridPrediction& pred, const GroundTruth& gt, const LossWeights& w);
double obj_loss(const GridPrediction& pred, const GroundTruth& gt, const LossWeights& w);
double total_loss(const GridPrediction& pred, const GroundTruth& gt, const LossWeights& w);
LossBreakdown evaluate(const GridPrediction& pred, const GroundTruth& gt, const LossWeights& w);

using LossFn = std::function<double(const GridPrediction&, const GroundTruth&, const LossWeights&)>;

// Closed-form gradients in GridPrediction::flatten() order.
std::vector<double> box_loss_gradient(const GridPrediction& pred, const GroundTruth& gt,
                                      const LossWeights& w);
std::vector<double> cls_loss_gradient(const GridPrediction& pred, const GroundTruth& gt,
                                      const LossWeights& w);
std::vector<double> obj_loss_gradient(const GridPrediction& pred, const GroundTruth& gt,
                                      const LossWeights& w);
std::vector<double> total_loss_gradient(const GridPrediction& pred, const GroundTruth& gt,
                                        const LossWeights& w);

// Central differences, one coordinate at a time. Step must lie in [1e-7, 1e-3].
std::vector<double> finite_difference_grad(const LossFn& loss, const GridPrediction& pred,
                                           const GroundTruth& gt, const LossWeights& w,
                                           double step);

// Regression fixture: one evaluation case with optional expected values.
struct FixtureCase {
  std::string name;
  GridPrediction prediction;
  GroundTruth ground_truth;
  LossWeights weights;
  bool has_expected = false;
  LossBreakdown expected;
};

std::vector<FixtureCase> parse_fixture(const nlohmann::json& doc);
std::vector<FixtureCase> load_fixture(const std::string& path);
nlohmann::json to_json(const FixtureCase& fixture);

}  // namespace marinex::yolo
