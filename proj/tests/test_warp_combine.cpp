#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ppstitch/synthetic.hpp"
#include "ppstitch/warp_combine.hpp"
#include "test_support.hpp"

using namespace ppstitch;
using namespace ppstitch::testing;

namespace {

CorrespondenceSet left_heavy_matches() {
    CorrespondenceSet set;
    set.target_width = 200;
    set.target_height = 200;
    set.reference_width = 400;
    set.reference_height = 400;
    RandomStream rng(2);
    for (int i = 0; i < 20; ++i) {
        Correspondence c;
        c.target = Point2(rng.uniform(5.0, 60.0), rng.uniform(5.0, 195.0));
        c.reference = c.target;
        c.id = i;
        set.pairs.push_back(c);
    }
    return set;
}

LocalWarpField random_local_field(const GridMesh& mesh, RandomStream& rng) {
    LocalWarpField field;
    field.mesh = mesh;
    for (std::size_t i = 0; i < mesh.centers.size(); ++i) {
        field.warps.push_back(Homography::from_matrix(random_homography(rng, 200.0).m));
    }
    return field;
}

UAxisFrame manual_frame(const GridMesh& mesh, const std::vector<double>& projections) {
    UAxisFrame frame;
    frame.origin = Point2(mesh.image_width / 2.0, mesh.image_height / 2.0);
    frame.projections = projections;
    const auto mm = std::minmax_element(projections.begin(), projections.end());
    frame.i_min = static_cast<int>(mm.first - projections.begin());
    frame.i_max = static_cast<int>(mm.second - projections.begin());
    return frame;
}

}  // namespace

TEST_CASE("build_u_axis: affine global transform has no distortion axis") {
    Eigen::Matrix3d a;
    a << 1.1, 0.05, 20.0, -0.04, 0.95, 5.0, 0.0, 0.0, 1.0;
    const GridMesh mesh = build_mesh(200, 200, 5, 5);
    const CorrespondenceSet set = left_heavy_matches();
    const UAxisFrame frame = build_u_axis(Homography::raw(a), mesh, set);
    CHECK(frame.no_distortion_axis);

    const BlendWeights w = blend_weights(frame, mesh);
    for (std::size_t i = 0; i < w.beta.size(); ++i) {
        CHECK(w.beta[i] == 0.0);
        CHECK(w.alpha[i] == 1.0);
    }
}

TEST_CASE("build_u_axis: zero rotation projects onto x offsets") {
    Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
    m(2, 0) = -2e-4;  // theta = 0 under the q(2,0) = -c branch
    const GridMesh mesh = build_mesh(200, 200, 5, 5);
    const CorrespondenceSet set = left_heavy_matches();
    const UAxisFrame frame = build_u_axis(Homography::raw(m), mesh, set);

    REQUIRE_FALSE(frame.no_distortion_axis);
    CHECK(frame.u_dir.x() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(frame.u_dir.y()) < 1e-12);
    for (std::size_t i = 0; i < mesh.centers.size(); ++i) {
        CHECK(frame.projections[i] ==
              doctest::Approx(mesh.centers[i].x() - 100.0).epsilon(1e-12));
    }
}

TEST_CASE("build_u_axis: the far end of the axis sits away from the overlap") {
    const LabeledScene scene = generate_scene(standard_scene("two-plane"));
    const GridMesh mesh = build_mesh(500, 400, 10, 8);
    const Homography global = solve_dlt(build_dlt_system(scene.set.pairs));
    const UAxisFrame frame = build_u_axis(global, mesh, scene.set);

    REQUIRE_FALSE(frame.no_distortion_axis);
    // Matches live on the left of the target, so the maximal projection
    // must land in the rightmost mesh column.
    CHECK(frame.i_max % mesh.cols == mesh.cols - 1);

    Point2 mean = Point2::Zero();
    for (const auto& pr : scene.set.pairs) mean += pr.target;
    mean /= static_cast<double>(scene.set.pairs.size());
    const double mean_proj = (mean - frame.origin).dot(frame.u_dir);
    CHECK(std::abs(mean_proj - frame.projections[frame.i_min]) <
          std::abs(mean_proj - frame.projections[frame.i_max]));
}

TEST_CASE("blend_weights: linear ramp between the extreme projections") {
    const GridMesh mesh = build_mesh(30, 10, 3, 1);
    const UAxisFrame frame = manual_frame(mesh, {-10.0, 0.0, 10.0});
    const BlendWeights w = blend_weights(frame, mesh);
    CHECK(w.beta[0] == 0.0);
    CHECK(w.beta[1] == 0.5);
    CHECK(w.beta[2] == 1.0);
    for (int i = 0; i < 3; ++i) {
        CHECK(w.alpha[i] + w.beta[i] == 1.0);
    }
}

TEST_CASE("blend_weights: monotone along the axis") {
    const GridMesh mesh = build_mesh(500, 400, 10, 8);
    CorrespondenceSet set = left_heavy_matches();
    set.target_width = 500;
    set.target_height = 400;
    Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
    m(2, 0) = 3e-4;
    m(2, 1) = 1e-4;
    const UAxisFrame frame = build_u_axis(Homography::raw(m), mesh, set);
    const BlendWeights w = blend_weights(frame, mesh);

    std::vector<std::size_t> order(w.beta.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return frame.projections[a] < frame.projections[b];
    });
    for (std::size_t k = 1; k < order.size(); ++k) {
        CHECK(w.beta[order[k]] >= w.beta[order[k - 1]]);
    }
    for (double b : w.beta) {
        CHECK(b >= 0.0);
        CHECK(b <= 1.0);
    }
}

TEST_CASE("blend_weights: coincident projections are degenerate") {
    const GridMesh mesh = build_mesh(30, 10, 3, 1);
    const UAxisFrame frame = manual_frame(mesh, {2.0, 2.0, 2.0});
    CHECK_THROWS_AS(blend_weights(frame, mesh), DegenerateAxis);
}

TEST_CASE("combine_warps: all-local endpoint") {
    RandomStream rng(5);
    const GridMesh mesh = build_mesh(200, 200, 4, 4);
    const LocalWarpField local = random_local_field(mesh, rng);
    BlendWeights w;
    w.alpha.assign(local.warps.size(), 1.0);
    w.beta.assign(local.warps.size(), 0.0);
    SimilarityTransform sim;
    sim.tx = 55.0;

    const CombinedWarpField field = combine_warps(local, sim, w);
    for (std::size_t i = 0; i < local.warps.size(); ++i) {
        CHECK((field.target_warps[i].m - local.warps[i].m).cwiseAbs().maxCoeff() == 0.0);
        CHECK((field.reference_warps[i].m - Eigen::Matrix3d::Identity())
                  .cwiseAbs()
                  .maxCoeff() < 1e-12);
    }
}

TEST_CASE("combine_warps: all-similarity endpoint") {
    RandomStream rng(6);
    const GridMesh mesh = build_mesh(200, 200, 4, 4);
    const LocalWarpField local = random_local_field(mesh, rng);
    BlendWeights w;
    w.alpha.assign(local.warps.size(), 0.0);
    w.beta.assign(local.warps.size(), 1.0);
    SimilarityTransform sim;
    sim.scale = 1.2;
    sim.angle = 0.3;
    sim.tx = -8.0;
    sim.ty = 4.0;

    const CombinedWarpField field = combine_warps(local, sim, w);
    for (const Homography& h : field.target_warps) {
        CHECK((h.m - sim.matrix()).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("combine_warps: midpoint blend of identity and a translation") {
    const GridMesh mesh = build_mesh(20, 20, 1, 1);
    LocalWarpField local;
    local.mesh = mesh;
    local.warps.push_back(Homography::identity());
    BlendWeights w;
    w.alpha = {0.5};
    w.beta = {0.5};
    SimilarityTransform sim;
    sim.tx = 2.0;

    const CombinedWarpField field = combine_warps(local, sim, w);
    Eigen::Matrix3d expected = Eigen::Matrix3d::Identity();
    expected(0, 2) = 1.0;
    CHECK((field.target_warps[0].m - expected).cwiseAbs().maxCoeff() == 0.0);
    CHECK((field.reference_warps[0].m - field.target_warps[0].m).cwiseAbs().maxCoeff() ==
          0.0);
}

TEST_CASE("combine_warps: compensating warp reproduces the blend exactly") {
    RandomStream rng(7);
    const GridMesh mesh = build_mesh(200, 200, 5, 5);
    const LocalWarpField local = random_local_field(mesh, rng);
    BlendWeights w;
    for (std::size_t i = 0; i < local.warps.size(); ++i) {
        const double b = static_cast<double>(i) / (local.warps.size() - 1);
        w.beta.push_back(b);
        w.alpha.push_back(1.0 - b);
    }
    SimilarityTransform sim;
    sim.scale = 1.1;
    sim.angle = 0.1;
    sim.tx = 30.0;

    const CombinedWarpField field = combine_warps(local, sim, w);
    for (std::size_t i = 0; i < local.warps.size(); ++i) {
        const Eigen::Matrix3d recomposed = field.reference_warps[i].m * local.warps[i].m;
        CHECK((recomposed - field.target_warps[i].m).cwiseAbs().maxCoeff() < 1e-9);

        // Any pair aligned by the local warp stays aligned after blending.
        for (int k = 0; k < 40; ++k) {
            const Point2 p(rng.uniform(0.0, 200.0), rng.uniform(0.0, 200.0));
            Point2 via_local;
            try {
                via_local = apply_homography(local.warps[i], p);
            } catch (const AtInfinity&) {
                continue;
            }
            const Point2 a = apply_homography(field.target_warps[i], p);
            const Point2 b = apply_homography(field.reference_warps[i], via_local);
            CHECK((a - b).norm() < 1e-6);
        }
    }
}

TEST_CASE("combine_warps: singular blends are reported") {
    const GridMesh mesh = build_mesh(20, 20, 1, 1);
    LocalWarpField local;
    local.mesh = mesh;
    local.warps.push_back(Homography::identity());
    BlendWeights w;
    w.alpha = {0.5};
    w.beta = {0.5};
    SimilarityTransform half_turn;
    half_turn.angle = M_PI;  // 0.5*I + 0.5*R(pi) collapses the plane
    CHECK_THROWS_AS(combine_warps(local, half_turn, w), SingularBlend);
}

TEST_CASE("export_weight_maps: endpoints and quantized sum") {
    const GridMesh mesh = build_mesh(40, 10, 4, 1);
    BlendWeights w;
    w.beta = {0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0};
    for (double b : w.beta) w.alpha.push_back(1.0 - b);

    const auto maps = export_weight_maps(w, mesh);
    const ImageBuffer& local_map = maps.first;
    const ImageBuffer& sim_map = maps.second;
    CHECK(local_map.width == 4);
    CHECK(local_map.height == 1);
    CHECK(sim_map.at(0, 0, 0) == 0.0f);
    CHECK(sim_map.at(3, 0, 0) == 1.0f);
    CHECK(local_map.at(0, 0, 0) == 1.0f);

    for (int x = 1; x < 4; ++x) {
        CHECK(sim_map.at(x, 0, 0) > sim_map.at(x - 1, 0, 0));
    }
    for (int x = 0; x < 4; ++x) {
        const int qa = static_cast<int>(std::lround(local_map.at(x, 0, 0) * 255.0f));
        const int qb = static_cast<int>(std::lround(sim_map.at(x, 0, 0) * 255.0f));
        CHECK(std::abs(qa + qb - 255) <= 1);
    }
}

TEST_CASE("export_weight_maps: all-local field renders white/black") {
    const GridMesh mesh = build_mesh(30, 30, 3, 3);
    BlendWeights w;
    w.alpha.assign(9, 1.0);
    w.beta.assign(9, 0.0);
    const auto maps = export_weight_maps(w, mesh);
    for (int y = 0; y < 3; ++y) {
        for (int x = 0; x < 3; ++x) {
            CHECK(maps.first.at(x, y, 0) == 1.0f);
            CHECK(maps.second.at(x, y, 0) == 0.0f);
        }
    }
}
