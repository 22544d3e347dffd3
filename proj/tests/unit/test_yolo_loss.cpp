#include <cmath>
#include <numeric>

#include "doctest.h"
#include "marinex/error.hpp"
#include "marinex/yolo_loss.hpp"
#include "yolo_instances.hpp"

using namespace marinex;
using namespace marinex::yolo;
using marinex::testing::oracle_loss;
using marinex::testing::random_yolo_instance;
using marinex::testing::relative_error;

namespace {

struct Single {
  GridPrediction pred = GridPrediction::zeros({1, 1, 1});
  GroundTruth gt = GroundTruth::zeros({1, 1, 1});
  LossWeights w;

  Single() {
    pred.class_probs = {1.0};
    gt.class_probs = {1.0};
  }
};

std::vector<double> scaled(std::vector<double> v, double k) {
  for (double& x : v) x *= k;
  return v;
}

}  // namespace

TEST_SUITE("yolo_loss") {

TEST_CASE("box loss hand example") {
  Single s;
  s.pred.boxes[0] = {0.5, 0.5, 0.2, 0.2, 1.0};
  s.gt.boxes[0] = {true, 0.5, 0.5, 0.4, 0.4, 1.0};
  CHECK(box_loss(s.pred, s.gt, s.w) == doctest::Approx((2 - 0.04) * (0.04 + 0.04)).epsilon(1e-15));
  CHECK(std::fabs(box_loss(s.pred, s.gt, s.w) - 0.1568) < 1e-12);
}

TEST_CASE("class loss hand example") {
  GridPrediction pred = GridPrediction::zeros({1, 1, 2});
  GroundTruth gt = GroundTruth::zeros({1, 1, 2});
  pred.class_probs = {0.5, 0.5};
  gt.class_probs = {1.0, 0.0};
  gt.boxes[0].responsible = true;
  CHECK(std::fabs(cls_loss(pred, gt, {}) - std::log(2.0)) < 1e-12);
  CHECK(cls_loss(pred, gt, {}) == doctest::Approx(0.6931).epsilon(1e-4));
}

TEST_CASE("confidence loss hand examples") {
  Single s;
  s.pred.boxes[0].conf = 0.5;
  s.gt.boxes[0] = {true, 0, 0, 0, 0, 1.0};
  CHECK(std::fabs(obj_loss(s.pred, s.gt, s.w) - 0.25) < 1e-12);

  Single bg;
  bg.pred.boxes[0].conf = 0.4;
  bg.w.lambda_noobj = 0.5;
  CHECK(std::fabs(obj_loss(bg.pred, bg.gt, bg.w) - 0.08) < 1e-12);
}

TEST_CASE("masked cells contribute nothing to box and class loss") {
  Rng rng(4);
  for (int n = 0; n < 20; ++n) {
    auto inst = random_yolo_instance(rng);
    for (auto& t : inst.gt.boxes) t.responsible = false;
    CHECK(box_loss(inst.pred, inst.gt, inst.weights) == 0.0);
    CHECK(cls_loss(inst.pred, inst.gt, inst.weights) == 0.0);
  }
}

TEST_CASE("total is the sum of the components") {
  Rng rng(6);
  for (int n = 0; n < 50; ++n) {
    const auto inst = random_yolo_instance(rng);
    const auto b = evaluate(inst.pred, inst.gt, inst.weights);
    CHECK(b.total == doctest::Approx(b.box + b.cls + b.obj).epsilon(1e-14));
    CHECK(total_loss(inst.pred, inst.gt, inst.weights) == b.total);
  }
}

TEST_CASE("library agrees with the direct oracle") {
  Rng rng(8);
  for (int n = 0; n < 100; ++n) {
    const auto inst = random_yolo_instance(rng);
    const auto want = oracle_loss(inst.pred, inst.gt, inst.weights);
    const auto got = evaluate(inst.pred, inst.gt, inst.weights);
    CHECK(got.box == doctest::Approx(want.box).epsilon(1e-12));
    CHECK(got.cls == doctest::Approx(want.cls).epsilon(1e-12));
    CHECK(got.obj == doctest::Approx(want.obj).epsilon(1e-12));
  }
}

TEST_CASE("zero at match") {
  Rng rng(10);
  for (int n = 0; n < 50; ++n) {
    auto inst = random_yolo_instance(rng);
    const int C = inst.pred.shape.num_classes;
    for (std::size_t k = 0; k < inst.pred.boxes.size(); ++k) {
      const auto& t = inst.gt.boxes[k];
      inst.pred.boxes[k] = {t.x, t.y, t.w, t.h, t.conf};
    }
    for (int cell = 0; cell < inst.pred.shape.cells(); ++cell) {
      bool any = false;
      for (int j = 0; j < inst.pred.shape.boxes_per_cell; ++j) {
        any = any || inst.gt.boxes[static_cast<std::size_t>(cell * inst.pred.shape.boxes_per_cell + j)].responsible;
      }
      if (!any) continue;
      for (int c = 0; c < C; ++c) {
        const auto k = static_cast<std::size_t>(cell * C + c);
        inst.pred.class_probs[k] = inst.gt.class_probs[k] > 0 ? 1.0 : 1e-300;
      }
    }
    CHECK(total_loss(inst.pred, inst.gt, inst.weights) == 0.0);
  }
}

TEST_CASE("non-negative and linear in each coefficient") {
  Rng rng(12);
  for (int n = 0; n < 100; ++n) {
    const auto inst = random_yolo_instance(rng);
    const auto base = evaluate(inst.pred, inst.gt, inst.weights);
    CHECK(base.box >= 0.0);
    CHECK(base.cls >= 0.0);
    CHECK(base.obj >= 0.0);
    auto w2 = inst.weights;
    w2.lambda_coord *= 3.0;
    w2.lambda_class *= 3.0;
    w2.lambda_obj *= 3.0;
    w2.lambda_noobj *= 3.0;
    const auto tripled = evaluate(inst.pred, inst.gt, w2);
    CHECK(tripled.box == doctest::Approx(3.0 * base.box).epsilon(1e-13));
    CHECK(tripled.cls == doctest::Approx(3.0 * base.cls).epsilon(1e-13));
    CHECK(tripled.obj == doctest::Approx(3.0 * base.obj).epsilon(1e-13));
    CHECK(evaluate(inst.pred, inst.gt, {0, 0, 0, 0}).total == 0.0);
  }
}

TEST_CASE("permuting cells leaves every loss unchanged") {
  Rng rng(14);
  for (int n = 0; n < 30; ++n) {
    const auto inst = random_yolo_instance(rng);
    const auto& sh = inst.pred.shape;
    std::vector<int> order(static_cast<std::size_t>(sh.cells()));
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t k = order.size(); k > 1; --k) {
      std::swap(order[k - 1], order[static_cast<std::size_t>(rng.uniform() * k)]);
    }
    auto pred = inst.pred;
    auto gt = inst.gt;
    for (int to = 0; to < sh.cells(); ++to) {
      const int from = order[static_cast<std::size_t>(to)];
      for (int j = 0; j < sh.boxes_per_cell; ++j) {
        pred.boxes[static_cast<std::size_t>(to * sh.boxes_per_cell + j)] =
            inst.pred.boxes[static_cast<std::size_t>(from * sh.boxes_per_cell + j)];
        gt.boxes[static_cast<std::size_t>(to * sh.boxes_per_cell + j)] =
            inst.gt.boxes[static_cast<std::size_t>(from * sh.boxes_per_cell + j)];
      }
      for (int c = 0; c < sh.num_classes; ++c) {
        pred.class_probs[static_cast<std::size_t>(to * sh.num_classes + c)] =
            inst.pred.class_probs[static_cast<std::size_t>(from * sh.num_classes + c)];
        gt.class_probs[static_cast<std::size_t>(to * sh.num_classes + c)] =
            inst.gt.class_probs[static_cast<std::size_t>(from * sh.num_classes + c)];
      }
    }
    const auto a = evaluate(inst.pred, inst.gt, inst.weights);
    const auto b = evaluate(pred, gt, inst.weights);
    CHECK(b.box == doctest::Approx(a.box).epsilon(1e-13));
    CHECK(b.cls == doctest::Approx(a.cls).epsilon(1e-13));
    CHECK(b.obj == doctest::Approx(a.obj).epsilon(1e-13));
  }
}

TEST_CASE("analytic gradients match central differences") {
  Rng rng(16);
  for (int n = 0; n < 100; ++n) {
    const auto inst = random_yolo_instance(rng);
    const auto& p = inst.pred;
    const auto& g = inst.gt;
    const auto& w = inst.weights;
    CHECK(relative_error(box_loss_gradient(p, g, w), finite_difference_grad(box_loss, p, g, w, 1e-6)) < 1e-5);
    CHECK(relative_error(cls_loss_gradient(p, g, w), finite_difference_grad(cls_loss, p, g, w, 1e-6)) < 1e-5);
    CHECK(relative_error(obj_loss_gradient(p, g, w), finite_difference_grad(obj_loss, p, g, w, 1e-6)) < 1e-5);
    CHECK(relative_error(total_loss_gradient(p, g, w), finite_difference_grad(total_loss, p, g, w, 1e-6)) < 1e-5);
  }
}

TEST_CASE("finite difference examples") {
  Single s;
  s.pred.boxes[0] = {0.3, 0.6, 0.2, 0.5, 0.5};
  s.gt.boxes[0] = {true, 0.3, 0.6, 0.2, 0.5, 1.0};
  const auto g = finite_difference_grad(box_loss, s.pred, s.gt, s.w, 1e-5);
  CHECK(std::fabs(g[0]) < 1e-6);  // x
  CHECK(std::fabs(g[1]) < 1e-6);  // y
  const auto go = finite_difference_grad(obj_loss, s.pred, s.gt, s.w, 1e-5);
  CHECK(go[4] == doctest::Approx(2 * (0.5 - 1.0)).epsilon(1e-6));

  auto w2 = s.w;
  w2.lambda_obj = 2.0;
  const auto go2 = finite_difference_grad(obj_loss, s.pred, s.gt, w2, 1e-5);
  CHECK(relative_error(go2, scaled(go, 2.0)) < 1e-9);

  CHECK_THROWS_AS(finite_difference_grad(box_loss, s.pred, s.gt, s.w, 1e-8), ValidationError);
  CHECK_THROWS_AS(finite_difference_grad(box_loss, s.pred, s.gt, s.w, 1e-2), ValidationError);
}

TEST_CASE("flatten and assign round trip") {
  Rng rng(18);
  auto inst = random_yolo_instance(rng);
  const auto flat = inst.pred.flatten();
  CHECK(flat.size() == inst.pred.parameter_count());
  auto copy = GridPrediction::zeros(inst.pred.shape);
  copy.assign(flat);
  CHECK(copy.flatten() == flat);
  CHECK_THROWS_AS(copy.assign({1.0}), ValidationError);
}

TEST_CASE("shape mismatch is rejected") {
  auto pred = GridPrediction::zeros({2, 1, 1});
  auto gt = GroundTruth::zeros({1, 1, 1});
  CHECK_THROWS_AS(box_loss(pred, gt, {}), ValidationError);
  CHECK_THROWS_AS(GridPrediction::zeros({0, 1, 1}), ValidationError);
}

TEST_CASE("validate rejects out-of-range values") {
  Single s;
  s.pred.boxes[0].conf = 1.5;
  CHECK_THROWS_AS(validate(s.pred, s.gt, s.w), ValidationError);
  Single t;
  t.w.lambda_coord = -1;
  CHECK_THROWS_AS(validate(t.pred, t.gt, t.w), ValidationError);
  Single u;
  u.gt.boxes[0].responsible = true;
  u.gt.class_probs = {0.5};
  CHECK_THROWS_AS(validate(u.pred, u.gt, u.w), ValidationError);
}

TEST_CASE("fixture file values") {
  const auto cases = load_fixture(MARINEX_TEST_DATA_DIR "/yolo_loss_fixture.json");
  REQUIRE(cases.size() == 4);
  for (const auto& c : cases) {
    REQUIRE(c.has_expected);
    const auto got = evaluate(c.prediction, c.ground_truth, c.weights);
    CHECK(std::fabs(got.box - c.expected.box) < 1e-12);
    CHECK(std::fabs(got.cls - c.expected.cls) < 1e-12);
    CHECK(std::fabs(got.obj - c.expected.obj) < 1e-12);
    CHECK(std::fabs(got.total - c.expected.total) < 1e-12);
    // Serialising and parsing again reproduces the case.
    const auto again = parse_fixture(nlohmann::json::array({to_json(c)}));
    REQUIRE(again.size() == 1);
    CHECK(again[0].prediction.flatten() == c.prediction.flatten());
    CHECK(evaluate(again[0].prediction, again[0].ground_truth, again[0].weights).total == got.total);
  }
}

TEST_CASE("malformed fixtures name the problem") {
  CHECK_THROWS_AS(parse_fixture(nlohmann::json{{"schema_version", 2}, {"cases", nlohmann::json::array()}}),
                  ValidationError);
  CHECK_THROWS_AS(parse_fixture(nlohmann::json::object()), ValidationError);
  nlohmann::json bad = {{"cases", {{{"grid_size", 1}, {"prediction", {{"boxes", nlohmann::json::array()}}}}}}};
  CHECK_THROWS_AS(parse_fixture(bad), ValidationError);
}

}
