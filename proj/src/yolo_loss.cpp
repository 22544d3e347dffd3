#include "marinex/yolo_loss.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "marinex/error.hpp"

namespace marinex::yolo {
namespace {

constexpr std::size_t kBoxScalars = 5;

void check_shape(const GridShape& s) {
  if (s.grid_size < 1 || s.boxes_per_cell < 1 || s.num_classes < 1) {
    throw ValidationError("grid_size, boxes_per_cell and num_classes must be >= 1", "shape");
  }
}

double square(double v) { return v * v; }

double box_residual(const Box& p, const TargetBox& t) {
  return square(p.x - t.x) + square(p.y - t.y) + square(p.w - t.w) + square(p.h - t.h);
}

std::size_t class_offset(const GridPrediction& pred) {
  return pred.boxes.size() * kBoxScalars;
}

// Number of responsible slots in a cell; the class term is counted once per
// responsible slot.
int responsible_in_cell(const GroundTruth& gt, int cell) {
  int n = 0;
  for (int j = 0; j < gt.shape.boxes_per_cell; ++j) {
    n += gt.boxes[static_cast<std::size_t>(cell * gt.shape.boxes_per_cell + j)].responsible;
  }
  return n;
}

double number(const nlohmann::json& node, const char* key, double fallback = 0.0) {
  const auto it = node.find(key);
  if (it == node.end()) return fallback;
  if (!it->is_number()) throw ValidationError("must be a number", key);
  return it->get<double>();
}

std::vector<double> class_rows(const nlohmann::json& rows, const GridShape& shape,
                               const std::string& where) {
  if (!rows.is_array() || static_cast<int>(rows.size()) != shape.cells()) {
    throw ValidationError("expected one row per cell", where);
  }
  std::vector<double> out;
  for (const auto& row : rows) {
    if (!row.is_array() || static_cast<int>(row.size()) != shape.num_classes) {
      throw ValidationError("expected one probability per class", where);
    }
    for (const auto& v : row) out.push_back(v.get<double>());
  }
  return out;
}

nlohmann::json rows_to_json(const std::vector<double>& probs, const GridShape& shape) {
  nlohmann::json rows = nlohmann::json::array();
  for (int c = 0; c < shape.cells(); ++c) {
    nlohmann::json row = nlohmann::json::array();
    for (int k = 0; k < shape.num_classes; ++k) {
      row.push_back(probs[static_cast<std::size_t>(c * shape.num_classes + k)]);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

GridPrediction GridPrediction::zeros(const GridShape& shape) {
  check_shape(shape);
  GridPrediction p;
  p.shape = shape;
  p.boxes.assign(static_cast<std::size_t>(shape.box_count()), Box{});
  p.class_probs.assign(static_cast<std::size_t>(shape.cells() * shape.num_classes),
                       1.0 / shape.num_classes);
  return p;
}

std::size_t GridPrediction::parameter_count() const {
  return boxes.size() * kBoxScalars + class_probs.size();
}

std::vector<double> GridPrediction::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const Box& b : boxes) {
    flat.insert(flat.end(), {b.x, b.y, b.w, b.h, b.conf});
  }
  flat.insert(flat.end(), class_probs.begin(), class_probs.end());
  return flat;
}

void GridPrediction::assign(const std::vector<double>& flat) {
  if (flat.size() != parameter_count()) {
    throw ValidationError("flat parameter vector has the wrong length", "prediction");
  }
  std::size_t k = 0;
  for (Box& b : boxes) {
    b.x = flat[k++];
    b.y = flat[k++];
    b.w = flat[k++];
    b.h = flat[k++];
    b.conf = flat[k++];
  }
  for (double& p : class_probs) p = flat[k++];
}

GroundTruth GroundTruth::zeros(const GridShape& shape) {
  check_shape(shape);
  GroundTruth g;
  g.shape = shape;
  g.boxes.assign(static_cast<std::size_t>(shape.box_count()), TargetBox{});
  g.class_probs.assign(static_cast<std::size_t>(shape.cells() * shape.num_classes), 0.0);
  return g;
}

void check_shapes(const GridPrediction& pred, const GroundTruth& gt) {
  check_shape(pred.shape);
  if (!(pred.shape == gt.shape)) {
    throw ValidationError("prediction and ground truth grids differ", "shape");
  }
  const auto boxes = static_cast<std::size_t>(pred.shape.box_count());
  const auto probs = static_cast<std::size_t>(pred.shape.cells() * pred.shape.num_classes);
  if (pred.boxes.size() != boxes || gt.boxes.size() != boxes) {
    throw ValidationError("box array length does not match S*S*B", "boxes");
  }
  if (pred.class_probs.size() != probs || gt.class_probs.size() != probs) {
    throw ValidationError("class array length does not match S*S*C", "class_probs");
  }
}

void validate(const GridPrediction& pred, const GroundTruth& gt, const LossWeights& w) {
  check_shapes(pred, gt);
  for (double lambda : {w.lambda_coord, w.lambda_class, w.lambda_obj, w.lambda_noobj}) {
    if (!std::isfinite(lambda) || lambda < 0.0) {
      throw ValidationError("loss coefficients must be finite and >= 0", "weights");
    }
  }
  for (const Box& b : pred.boxes) {
    if (!(b.w >= 0.0) || !(b.h >= 0.0)) throw ValidationError("extent must be >= 0", "prediction.boxes");
    if (!(b.conf >= 0.0 && b.conf <= 1.0)) {
      throw ValidationError("confidence must lie in [0, 1]", "prediction.boxes");
    }
  }
  for (double p : pred.class_probs) {
    if (!(p > 0.0 && p <= 1.0)) throw ValidationError("must lie in (0, 1]", "prediction.class_probs");
  }
  const int C = gt.shape.num_classes;
  for (int cell = 0; cell < gt.shape.cells(); ++cell) {
    if (responsible_in_cell(gt, cell) == 0) continue;
    double sum = 0.0;
    for (int k = 0; k < C; ++k) sum += gt.class_probs[static_cast<std::size_t>(cell * C + k)];
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ValidationError("class distribution of an assigned cell must sum to 1",
                            "ground_truth.class_probs");
    }
  }
}

double box_loss(const GridPrediction& pred, const GroundTruth& gt, const LossWeights& w) {
  check_shapes(pred, gt);
  double sum = 0.0;
  for (std::size_t k = 0; k < pred.boxes.size(); ++k) {
    if (!gt.boxes[k].responsible) continue;
    const Box& p = pred.boxes[k];
    sum += (2.0 - p.w * p.h) * box_residual(p, gt.boxes[k]);
  }
  return w.lambda_coord * sum;
}

double cls_loss(const GridPrediction& pred, const GroundTruth& gt, const LossWeights& w) {
  check_shapes(pred, gt);
  const int C = pred.shape.num_classes;
  double sum = 0.0;
  for (int cell = 0; cell < pred.shape.cells(); ++cell) {
    const int n = responsible_in_cell(gt, cell);
    if (n == 0) continue;
    double ce = 0.0;
    for (int k = 0; k < C; ++k) {
      const auto idx = static_cast<std::size_t>(cell * C + k);
      const double target = gt.class_probs[idx];
      if (target == 0.0) continue;
      ce -= target * std::log(std::max(pred.class_probs[idx], kProbFloor));
    }
    sum += n * ce;
  }
  return w.lambda_class * sum;
}

double obj_loss(const GridPrediction& pred, const GroundTruth& gt, const LossWeights& w) {
  check_shapes(pred, gt);
  double with_obj = 0.0;
  double without_obj = 0.0;
  for (std::size_t k = 0; k < pred.boxes.size(); ++k) {
    const double e = square(pred.boxes[k].conf - gt.boxes[k].conf);
    (gt.boxes[k].responsible ? with_obj : without_obj) += e;
  }
  return w.lambda_noobj * without_obj + w.lambda_obj * with_obj;
}

double total_loss(const GridPrediction& pred, const GroundTruth& gt, const LossWeights& w) {
  return box_loss(pred, gt, w) + cls_loss(pred, gt, w) + obj_loss(pred, gt, w);
}

LossBreakdown evaluate(const GridPrediction& pred, const GroundTruth& gt, const LossWeights& w) {
  LossBreakdown out;
  out.box = box_loss(pred, gt, w);
  out.cls = cls_loss(pred, gt, w);
  out.obj = obj_loss(pred, gt, w);
  out.total = out.box + out.cls + out.obj;
  return out;
}

std::vector<double> box_loss_gradient(const GridPrediction& pred, const GroundTruth& gt,
                                      const LossWeights& w) {
  check_shapes(pred, gt);
  std::vector<double> g(pred.parameter_count(), 0.0);
  for (std::size_t k = 0; k < pred.boxes.size(); ++k) {
    const TargetBox& t = gt.boxes[k];
    if (!t.responsible) continue;
    const Box& p = pred.boxes[k];
    const double scale = 2.0 - p.w * p.h;
    const double residual = box_residual(p, t);
    double* gk = &g[k * kBoxScalars];
    gk[0] = w.lambda_coord * scale * 2.0 * (p.x - t.x);
    gk[1] = w.lambda_coord * scale * 2.0 * (p.y - t.y);
    gk[2] = w.lambda_coord * (-p.h * residual + scale * 2.0 * (p.w - t.w));
    gk[3] = w.lambda_coord * (-p.w * residual + scale * 2.0 * (p.h - t.h));
  }
  return g;
}

std::vector<double> cls_loss_gradient(const GridPrediction& pred, const GroundTruth& gt,
                                      const LossWeights& w) {
  check_shapes(pred, gt);
  std::vector<double> g(pred.parameter_count(), 0.0);
  const int C = pred.shape.num_classes;
  const std::size_t offset = class_offset(pred);
  for (int cell = 0; cell < pred.shape.cells(); ++cell) {
    const int n = responsible_in_cell(gt, cell);
    if (n == 0) continue;
    for (int k = 0; k < C; ++k) {
      const auto idx = static_cast<std::size_t>(cell * C + k);
      const double p_hat = pred.class_probs[idx];
      // Below the floor the log argument is constant.
      if (p_hat <= kProbFloor) continue;
      g[offset + idx] = -w.lambda_class * n * gt.class_probs[idx] / p_hat;
    }
  }
  return g;
}

std::vector<double> obj_loss_gradient(const GridPrediction& pred, const GroundTruth& gt,
                                      const LossWeights& w) {
  check_shapes(pred, gt);
  std::vector<double> g(pred.parameter_count(), 0.0);
  for (std::size_t k = 0; k < pred.boxes.size(); ++k) {
    const double lambda = gt.boxes[k].responsible ? w.lambda_obj : w.lambda_noobj;
    g[k * kBoxScalars + 4] = lambda * 2.0 * (pred.boxes[k].conf - gt.boxes[k].conf);
  }
  return g;
}

std::vector<double> total_loss_gradient(const GridPrediction& pred, const GroundTruth& gt,
                                        const LossWeights& w) {
  auto g = box_loss_gradient(pred, gt, w);
  const auto gc = cls_loss_gradient(pred, gt, w);
  const auto go = obj_loss_gradient(pred, gt, w);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += gc[i] + go[i];
  return g;
}

std::vector<double> finite_difference_grad(const LossFn& loss, const GridPrediction& pred,
                                           const GroundTruth& gt, const LossWeights& w,
                                           double step) {
  if (!(step >= 1e-7 && step <= 1e-3)) {
    throw ValidationError("step must lie in [1e-7, 1e-3]", "step");
  }
  const std::vector<double> base = pred.flatten();
  std::vector<double> grad(base.size(), 0.0);
  GridPrediction probe = pred;
  std::vector<double> x = base;
  for (std::size_t i = 0; i < base.size(); ++i) {
    x[i] = base[i] + step;
    probe.assign(x);
    const double up = loss(probe, gt, w);
    x[i] = base[i] - step;
    probe.assign(x);
    const double down = loss(probe, gt, w);
    x[i] = base[i];
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

std::vector<FixtureCase> parse_fixture(const nlohmann::json& doc) {
  const nlohmann::json* cases = &doc;
  if (doc.is_object()) {
    if (doc.value("schema_version", 1) != 1) {
      throw ValidationError("unsupported schema_version", "schema_version");
    }
    if (!doc.contains("cases")) throw ValidationError("missing", "cases");
    cases = &doc.at("cases");
  }
  if (!cases->is_array()) throw ValidationError("must be an array", "cases");

  std::vector<FixtureCase> out;
  for (std::size_t n = 0; n < cases->size(); ++n) {
    const auto& c = (*cases)[n];
    const std::string where = "cases[" + std::to_string(n) + "]";
    try {
      FixtureCase fc;
      fc.name = c.value("name", where);
      GridShape shape;
      shape.grid_size = c.value("grid_size", 1);
      shape.boxes_per_cell = c.value("boxes_per_cell", 1);
      shape.num_classes = c.value("num_classes", 1);
      fc.prediction = GridPrediction::zeros(shape);
      fc.ground_truth = GroundTruth::zeros(shape);

      if (c.contains("weights")) {
        const auto& wj = c.at("weights");
        fc.weights.lambda_coord = number(wj, "lambda_coord", 1.0);
        fc.weights.lambda_class = number(wj, "lambda_class", 1.0);
        fc.weights.lambda_obj = number(wj, "lambda_obj", 1.0);
        fc.weights.lambda_noobj = number(wj, "lambda_noobj", 1.0);
      }

      const auto& pj = c.at("prediction");
      const auto& pboxes = pj.at("boxes");
      if (static_cast<int>(pboxes.size()) != shape.box_count()) {
        throw ValidationError("expected S*S*B boxes", "prediction.boxes");
      }
      for (std::size_t k = 0; k < pboxes.size(); ++k) {
        const auto& b = pboxes[k];
        fc.prediction.boxes[k] = {number(b, "x"), number(b, "y"), number(b, "w"),
                                  number(b, "h"), number(b, "conf")};
      }
      fc.prediction.class_probs = class_rows(pj.at("class_probs"), shape, "prediction.class_probs");

      const auto& gj = c.at("ground_truth");
      const auto& gboxes = gj.at("boxes");
      if (static_cast<int>(gboxes.size()) != shape.box_count()) {
        throw ValidationError("expected S*S*B boxes", "ground_truth.boxes");
      }
      for (std::size_t k = 0; k < gboxes.size(); ++k) {
        const auto& b = gboxes[k];
        fc.ground_truth.boxes[k] = {b.value("obj", 0) != 0, number(b, "x"), number(b, "y"),
                                    number(b, "w"), number(b, "h"), number(b, "conf")};
      }
      fc.ground_truth.class_probs =
          class_rows(gj.at("class_probs"), shape, "ground_truth.class_probs");

      if (c.contains("expected")) {
        const auto& e = c.at("expected");
        fc.has_expected = true;
        fc.expected.box = number(e, "box");
        fc.expected.cls = number(e, "cls");
        fc.expected.obj = number(e, "obj");
        fc.expected.total =
            number(e, "total", fc.expected.box + fc.expected.cls + fc.expected.obj);
      }
      validate(fc.prediction, fc.ground_truth, fc.weights);
      out.push_back(std::move(fc));
    } catch (const ValidationError& e) {
      throw ValidationError(e.what(), where);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(e.what(), where);
    }
  }
  return out;
}

std::vector<FixtureCase> load_fixture(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open fixture file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(e.what(), path);
  }
  return parse_fixture(doc);
}

nlohmann::json to_json(const FixtureCase& fc) {
  const GridShape& s = fc.prediction.shape;
  nlohmann::json c;
  c["name"] = fc.name;
  c["grid_size"] = s.grid_size;
  c["boxes_per_cell"] = s.boxes_per_cell;
  c["num_classes"] = s.num_classes;
  c["weights"] = {{"lambda_coord", fc.weights.lambda_coord},
                  {"lambda_class", fc.weights.lambda_class},
                  {"lambda_obj", fc.weights.lambda_obj},
                  {"lambda_noobj", fc.weights.lambda_noobj}};
  nlohmann::json pboxes = nlohmann::json::array();
  for (const Box& b : fc.prediction.boxes) {
    pboxes.push_back({{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}, {"conf", b.conf}});
  }
  c["prediction"] = {{"boxes", pboxes}, {"class_probs", rows_to_json(fc.prediction.class_probs, s)}};
  nlohmann::json gboxes = nlohmann::json::array();
  for (const TargetBox& b : fc.ground_truth.boxes) {
    gboxes.push_back({{"obj", b.responsible ? 1 : 0}, {"x", b.x}, {"y", b.y}, {"w", b.w},
                      {"h", b.h}, {"conf", b.conf}});
  }
  c["ground_truth"] = {{"boxes", gboxes},
                       {"class_probs", rows_to_json(fc.ground_truth.class_probs, s)}};
  if (fc.has_expected) {
    c["expected"] = {{"box", fc.expected.box}, {"cls", fc.expected.cls},
                     {"obj", fc.expected.obj}, {"total", fc.expected.total}};
  }
  return c;
}

}  // namespace marinex::yolo
