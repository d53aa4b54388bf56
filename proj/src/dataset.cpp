#include "dsvs/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace dsvs {
namespace {

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

bool is_blank(const std::string& line) {
    return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

std::vector<double> split_doubles(const std::string& line, int line_no) {
    std::vector<double> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            out.push_back(std::stod(cell));
        } catch (const std::exception&) {
            throw ParseError("line " + std::to_string(line_no) + ": bad number '" + cell + "'");
        }
    }
    return out;
}

}  // namespace

std::vector<PlanarTrajectory> load_planar_trajectories(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);

    std::vector<PlanarTrajectory> out;
    PlanarTrajectory current;
    std::string line;
    int line_no = 0;
    bool seen_any = false;

    auto flush = [&]() {
        if (current.size() == 0) return;
        if (current.size() < 2)
            throw TooShort("demonstration block ending at line " + std::to_string(line_no) +
                           " has fewer than 2 samples");
        // Central finite differences where the file carries no velocities.
        std::vector<Eigen::Vector2d> vel(current.size());
        const int n = current.size();
        for (int i = 0; i < n; ++i) {
            const int lo = std::max(0, i - 1);
            const int hi = std::min(n - 1, i + 1);
            vel[i] = (current.xy[hi] - current.xy[lo]) / (current.t[hi] - current.t[lo]);
        }
        current.velocities = std::move(vel);
        out.push_back(std::move(current));
        current = PlanarTrajectory{};
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (is_blank(line)) {
            flush();
            continue;
        }
        if (line.rfind("t,", 0) == 0 || line.rfind("t ,", 0) == 0) continue;  // header row
        seen_any = true;
        const auto vals = split_doubles(line, line_no);
        if (vals.size() != 3)
            throw ParseError("line " + std::to_string(line_no) + ": expected t,x,y");
        if (!current.t.empty() && vals[0] <= current.t.back())
            throw ParseError("line " + std::to_string(line_no) +
                             ": timestamps must be strictly increasing");
        current.t.push_back(vals[0]);
        current.xy.emplace_back(vals[1], vals[2]);
    }
    flush();

    if (!seen_any) throw ParseError(path + ": no samples found");
    return out;
}

void write_planar_trajectories(const std::string& path,
                               const std::vector<PlanarTrajectory>& trajectories) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << "t,x,y\n";
    for (size_t d = 0; d < trajectories.size(); ++d) {
        if (d > 0) out << "\n";
        const auto& traj = trajectories[d];
        for (int i = 0; i < traj.size(); ++i) {
            out << fmt(traj.t[i]) << "," << fmt(traj.xy[i].x()) << "," << fmt(traj.xy[i].y())
                << "\n";
        }
    }
}

void scale_planar_to_box(std::vector<PlanarTrajectory>& trajectories, double box_size) {
    if (trajectories.empty() || box_size <= 0.0) return;
    Eigen::Vector2d lo(std::numeric_limits<double>::max(), std::numeric_limits<double>::max());
    Eigen::Vector2d hi = -lo;
    for (const auto& traj : trajectories) {
        for (const auto& p : traj.xy) {
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
    }
    const double extent = (hi - lo).maxCoeff();
    if (extent <= 0.0) return;
    const double factor = box_size / extent;
    for (auto& traj : trajectories) {
        const Eigen::Vector2d goal = traj.xy.back();
        for (auto& p : traj.xy) p = goal + factor * (p - goal);
        if (traj.velocities) {
            for (auto& v : *traj.velocities) v *= factor;
        }
    }
}

Demonstration augment(const PlanarTrajectory& planar, double z_start, double z_end,
                      const Scene& scene, const std::string& class_name, int demo_index) {
    if (planar.size() < 2) throw TooShort("augment: planar trajectory has fewer than 2 samples");
    if (std::abs(z_end - scene.target_position().z()) > 1e-9)
        throw ConfigError("augment: z_end must equal the scene target height");

    const int n = planar.size();
    const double t0 = planar.t.front();
    const double t_end = planar.t.back();
    const double duration = t_end - t0;
    if (duration <= 0.0) throw ParseError("augment: non-increasing timestamps");

    // Translate so the final sample lands exactly on the target pose.
    const Eigen::Vector2d shift =
        scene.target_position().head<2>() - planar.xy.back();

    Demonstration demo;
    demo.class_name = class_name;
    demo.demo_index = demo_index;
    demo.T = duration / (n - 1);
    demo.samples.resize(n);
    for (int i = 0; i < n; ++i) {
        auto& sample = demo.samples[i];
        sample.t = planar.t[i] - t0;
        const double frac = (planar.t[i] - t0) / duration;
        sample.position << planar.xy[i] + shift, z_start + (z_end - z_start) * frac;
        sample.s = scene.features_at(sample.position);
        sample.e = sample.s - scene.desired_features();
    }
    demo.samples.back().position = scene.target_position();
    demo.samples.back().s = scene.desired_features();
    demo.samples.back().e.setZero();
    for (int i = 0; i + 1 < n; ++i) {
        demo.samples[i].v = (demo.samples[i + 1].position - demo.samples[i].position) /
                            (demo.samples[i + 1].t - demo.samples[i].t);
    }
    demo.samples.back().v.setZero();
    return demo;
}

Demonstration resample(const Demonstration& demo, int n, const Scene& scene) {
    if (demo.size() < 2) throw TooShort("resample: demonstration has fewer than 2 samples");
    if (n < 2) throw Error("resample: need at least 2 output samples");
    if (n == demo.size()) return demo;

    const double t0 = demo.samples.front().t;
    const double t_end = demo.samples.back().t;
    const double T = (t_end - t0) / (n - 1);

    Demonstration out;
    out.class_name = demo.class_name;
    out.demo_index = demo.demo_index;
    out.T = T;
    out.samples.resize(n);

    int hi = 1;
    for (int j = 0; j < n; ++j) {
        auto& sample = out.samples[j];
        sample.t = (j == n - 1) ? t_end : t0 + j * T;
        if (j == 0) {
            sample.position = demo.samples.front().position;
        } else if (j == n - 1) {
            sample.position = demo.samples.back().position;
        } else {
            while (hi < demo.size() - 1 && demo.samples[hi].t < sample.t) ++hi;
            const auto& a = demo.samples[hi - 1];
            const auto& b = demo.samples[hi];
            const double w = (sample.t - a.t) / (b.t - a.t);
            sample.position = (1.0 - w) * a.position + w * b.position;
        }
        sample.s = scene.features_at(sample.position);
        sample.e = sample.s - scene.desired_features();
    }
    for (int j = 0; j + 1 < n; ++j) {
        out.samples[j].v = (out.samples[j + 1].position - out.samples[j].position) / T;
    }
    out.samples.back().v.setZero();
    return out;
}

TrainingSet build_rds_training(const std::vector<Demonstration>& demos, double lambda,
                               const Mat38& target_pinv) {
    TrainingSet set;
    set.kind = TrainingKind::RDS;
    for (const auto& demo : demos) {
        for (const auto& sample : demo.samples) {
            const Vec3 eps = target_pinv * sample.e;
            set.inputs.push_back(eps);
            set.outputs.push_back(sample.v + lambda * eps);
        }
    }
    return set;
}

TrainingSet build_clf_training(const std::vector<Demonstration>& demos,
                               const Mat38& target_pinv) {
    TrainingSet set;
    set.kind = TrainingKind::CLF;
    for (const auto& demo : demos) {
        for (const auto& sample : demo.samples) {
            set.inputs.push_back(target_pinv * sample.e);
            set.outputs.push_back(sample.v);
        }
    }
    return set;
}

FdmTraining build_fdm_training(const std::vector<Demonstration>& demos,
                               const Mat38& target_pinv) {
    if (demos.empty()) throw Error("build_fdm_training: no demonstrations");
    const int n = demos.front().size();
    for (const auto& demo : demos) {
        if (demo.size() != n)
            throw UnequalLengths("build_fdm_training: demonstrations differ in length");
    }

    FdmTraining training;
    training.n_samples = n;
    training.set.kind = TrainingKind::FDM;
    std::vector<Vec3> mean_errors(n, Vec3::Zero());
    for (const auto& demo : demos) {
        for (int i = 0; i < n; ++i) mean_errors[i] += target_pinv * demo.samples[i].e;
    }
    for (auto& eps : mean_errors) eps /= static_cast<double>(demos.size());
    training.initial_mean = mean_errors.front();

    // Pairs (averaged error, straight-line reference), indexed 1..N.
    for (int i = 1; i <= n; ++i) {
        training.set.inputs.push_back(mean_errors[i - 1]);
        training.set.outputs.push_back(static_cast<double>(n - i) / n * training.initial_mean);
    }
    return training;
}

Eigen::MatrixXd to_joint_matrix(const TrainingSet& set) {
    Eigen::MatrixXd joint(6, set.size());
    for (int i = 0; i < set.size(); ++i) {
        joint.col(i).head<3>() = set.inputs[i];
        joint.col(i).tail<3>() = set.outputs[i];
    }
    return joint;
}

void write_demonstrations_csv(const std::string& path,
                              const std::vector<Demonstration>& demos) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << "n,t,px,py,pz,s1,s2,s3,s4,s5,s6,s7,s8,e1,e2,e3,e4,e5,e6,e7,e8,vx,vy,vz\n";
    for (size_t d = 0; d < demos.size(); ++d) {
        if (d > 0) out << "\n";
        const auto& demo = demos[d];
        for (int i = 0; i < demo.size(); ++i) {
            const auto& sample = demo.samples[i];
            out << i << "," << fmt(sample.t);
            for (int c = 0; c < 3; ++c) out << "," << fmt(sample.position(c));
            for (int c = 0; c < 8; ++c) out << "," << fmt(sample.s(c));
            for (int c = 0; c < 8; ++c) out << "," << fmt(sample.e(c));
            for (int c = 0; c < 3; ++c) out << "," << fmt(sample.v(c));
            out << "\n";
        }
    }
}

std::vector<Demonstration> read_demonstrations_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);

    std::vector<Demonstration> out;
    Demonstration current;
    std::string line;
    int line_no = 0;

    auto flush = [&]() {
        if (current.samples.empty()) return;
        if (current.size() < 2)
            throw TooShort("demonstration block ending at line " + std::to_string(line_no) +
                           " has fewer than 2 samples");
        current.demo_index = static_cast<int>(out.size());
        current.T = (current.samples.back().t - current.samples.front().t) /
                    (current.size() - 1);
        out.push_back(std::move(current));
        current = Demonstration{};
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (is_blank(line)) {
            flush();
            continue;
        }
        if (line.rfind("n,", 0) == 0) continue;  // header row
        const auto vals = split_doubles(line, line_no);
        if (vals.size() != 24)
            throw ParseError("line " + std::to_string(line_no) + ": expected 24 columns");
        DemoSample sample;
        sample.t = vals[1];
        for (int c = 0; c < 3; ++c) sample.position(c) = vals[2 + c];
        for (int c = 0; c < 8; ++c) sample.s(c) = vals[5 + c];
        for (int c = 0; c < 8; ++c) sample.e(c) = vals[13 + c];
        for (int c = 0; c < 3; ++c) sample.v(c) = vals[21 + c];
        current.samples.push_back(sample);
    }
    flush();

    if (out.empty()) throw ParseError(path + ": no samples found");
    return out;
}

}  // namespace dsvs
