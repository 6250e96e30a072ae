#include "clrun/streams.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <numeric>

#include "clrun/rng.hpp"

namespace clrun {

namespace {

std::uint32_t read_be32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw DataError("truncated IDX header in " + path);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw DataError("cannot open " + images_path);
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw DataError("cannot open " + labels_path);

    const std::uint32_t img_magic = read_be32(img, images_path);
    if (img_magic != 0x00000803u) {
        throw DataError("bad image magic in " + images_path);
    }
    const std::uint32_t n_images = read_be32(img, images_path);
    const std::uint32_t rows = read_be32(img, images_path);
    const std::uint32_t cols = read_be32(img, images_path);

    const std::uint32_t lab_magic = read_be32(lab, labels_path);
    if (lab_magic != 0x00000801u) {
        throw DataError("bad label magic in " + labels_path);
    }
    const std::uint32_t n_labels = read_be32(lab, labels_path);
    if (n_images != n_labels) {
        throw DataError("image/label count mismatch: " + std::to_string(n_images) +
                        " vs " + std::to_string(n_labels));
    }

    const std::size_t dim = std::size_t(rows) * cols;
    std::vector<unsigned char> raw(std::size_t(n_images) * dim);
    img.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size()));
    if (std::size_t(img.gcount()) != raw.size()) {
        throw DataError("truncated image data in " + images_path);
    }
    std::vector<unsigned char> raw_labels(n_labels);
    lab.read(reinterpret_cast<char*>(raw_labels.data()),
             std::streamsize(raw_labels.size()));
    if (std::size_t(lab.gcount()) != raw_labels.size()) {
        throw DataError("truncated label data in " + labels_path);
    }

    Dataset ds;
    ds.inputs = Tensor({n_images, dim});
    for (std::size_t i = 0; i < raw.size(); ++i) {
        ds.inputs[i] = static_cast<double>(raw[i]) / 255.0;
    }
    ds.labels.assign(raw_labels.begin(), raw_labels.end());
    ds.name = images_path;
    return ds;
}

Tensor rotate_image(const Tensor& img, double degrees) {
    const bool flat = img.rank() == 1;
    std::size_t side;
    if (flat) {
        side = static_cast<std::size_t>(std::lround(std::sqrt(double(img.size()))));
        if (side * side != img.size()) {
            throw ShapeError("rotate_image: flat input is not square");
        }
    } else if (img.rank() == 2 && img.rows() == img.cols()) {
        side = img.rows();
    } else {
        throw ShapeError("rotate_image expects a square image");
    }
    Tensor out(img.shape());
    const double c = (static_cast<double>(side) - 1.0) / 2.0;
    const double rad = degrees * std::numbers::pi / 180.0;
    const double cs = std::cos(rad);
    const double sn = std::sin(rad);
    for (std::size_t r = 0; r < side; ++r) {
        for (std::size_t q = 0; q < side; ++q) {
            // inverse map: where in the source does this output pixel land
            const double dy = static_cast<double>(r) - c;
            const double dx = static_cast<double>(q) - c;
            const double sy = c + (sn * dx + cs * dy);
            const double sx = c + (cs * dx - sn * dy);
            const auto sample = [&](long yy, long xx) -> double {
                if (yy < 0 || xx < 0 || yy >= long(side) || xx >= long(side)) return 0.0;
                return img[std::size_t(yy) * side + std::size_t(xx)];
            };
            const long y0 = long(std::floor(sy));
            const long x0 = long(std::floor(sx));
            const double fy = sy - double(y0);
            const double fx = sx - double(x0);
            double v = (1 - fy) * (1 - fx) * sample(y0, x0) +
                       (1 - fy) * fx * sample(y0, x0 + 1) +
                       fy * (1 - fx) * sample(y0 + 1, x0) +
                       fy * fx * sample(y0 + 1, x0 + 1);
            out[r * side + q] = std::clamp(v, 0.0, 1.0);
        }
    }
    return out;
}

Tensor apply_permutation(const Tensor& img, const std::vector<std::size_t>& perm) {
    if (perm.size() != img.size()) {
        throw ShapeError("permutation length does not match image size");
    }
    Tensor out(img.shape());
    for (std::size_t i = 0; i < perm.size(); ++i) out[i] = img[perm[i]];
    return out;
}

namespace {

// Draws `count` indices per task from a pool of n, disjoint across tasks when
// possible; falls back to a fresh shuffle per task (marking reuse) otherwise.
std::vector<std::vector<std::size_t>> draw_task_indices(std::size_t n,
                                                        std::size_t tasks,
                                                        std::size_t count,
                                                        Rng& rng,
                                                        bool& reused) {
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    std::vector<std::vector<std::size_t>> out(tasks);
    if (tasks * count <= n) {
        rng.shuffle(pool);
        for (std::size_t t = 0; t < tasks; ++t) {
            out[t].assign(pool.begin() + long(t * count),
                          pool.begin() + long((t + 1) * count));
        }
    } else {
        if (count > n) throw ConfigError("per-task sample count exceeds the pool");
        reused = true;
        for (std::size_t t = 0; t < tasks; ++t) {
            rng.shuffle(pool);
            out[t].assign(pool.begin(), pool.begin() + long(count));
        }
    }
    return out;
}

int max_label(const std::vector<int>& labels) {
    int m = 0;
    for (const int l : labels) m = std::max(m, l);
    return m;
}

}  // namespace

TaskStream make_rotations(const Dataset& train, const Dataset& test,
                          std::size_t tasks, std::size_t per_task,
                          std::size_t test_per_task, std::uint64_t seed) {
    if (tasks < 1) throw ConfigError("make_rotations: tasks must be >= 1");
    TaskStream s;
    s.benchmark = "rotations";
    s.input_dim = train.dim();
    s.classes = std::size_t(max_label(train.labels)) + 1;
    Rng rng(derive_seed(seed, "rotations"));
    const auto train_idx =
        draw_task_indices(train.size(), tasks, per_task, rng, s.reused_samples);
    const auto test_idx =
        draw_task_indices(test.size(), tasks, test_per_task, rng, s.reused_samples);
    for (std::size_t t = 0; t < tasks; ++t) {
        Task task;
        const double angle =
            tasks >= 2 ? 180.0 * double(t) / double(tasks - 1) : 0.0;
        task.transform.kind = TransformDesc::Kind::rotation;
        task.transform.angle = angle;
        const auto transform = [&](const Tensor& img) {
            return angle == 0.0 ? img : rotate_image(img, angle);
        };
        for (const std::size_t i : train_idx[t]) {
            task.train.push_back({transform(train.inputs.row(i)), train.labels[i],
                                  int(t), int(i)});
        }
        for (const std::size_t i : test_idx[t]) {
            task.test.push_back({transform(test.inputs.row(i)), test.labels[i],
                                 int(t), int(i)});
        }
        s.tasks.push_back(std::move(task));
    }
    return s;
}

TaskStream make_permutations(const Dataset& train, const Dataset& test,
                             std::size_t tasks, std::size_t per_task,
                             std::size_t test_per_task, std::uint64_t seed,
                             bool many) {
    if (many) {
        if (tasks == 0) tasks = 100;
        if (per_task == 0) per_task = 200;
    }
    if (tasks < 1) throw ConfigError("make_permutations: tasks must be >= 1");
    TaskStream s;
    s.benchmark = many ? "many_permutations" : "permutations";
    s.input_dim = train.dim();
    s.classes = std::size_t(max_label(train.labels)) + 1;
    Rng rng(derive_seed(seed, "permutations"));
    const auto train_idx =
        draw_task_indices(train.size(), tasks, per_task, rng, s.reused_samples);
    const auto test_idx =
        draw_task_indices(test.size(), tasks, test_per_task, rng, s.reused_samples);
    for (std::size_t t = 0; t < tasks; ++t) {
        Task task;
        task.transform.kind = TransformDesc::Kind::permutation;
        std::vector<std::size_t> perm(train.dim());
        std::iota(perm.begin(), perm.end(), 0);
        if (t > 0) rng.shuffle(perm);  // task 0 keeps the identity
        task.transform.permutation = perm;
        const bool identity = t == 0;
        for (const std::size_t i : train_idx[t]) {
            Tensor in = train.inputs.row(i);
            task.train.push_back({identity ? in : apply_permutation(in, perm),
                                  train.labels[i], int(t), int(i)});
        }
        for (const std::size_t i : test_idx[t]) {
            Tensor in = test.inputs.row(i);
            task.test.push_back({identity ? in : apply_permutation(in, perm),
                                 test.labels[i], int(t), int(i)});
        }
        s.tasks.push_back(std::move(task));
    }
    return s;
}

namespace {

// random rotation (orthogonal matrix) by Gram-Schmidt over a Gaussian matrix
std::vector<double> random_rotation(std::size_t dim, Rng& rng) {
    std::vector<double> q(dim * dim);
    for (std::size_t col = 0; col < dim; ++col) {
        std::vector<double> v(dim);
        for (double& x : v) x = rng.gaussian();
        for (std::size_t prev = 0; prev < col; ++prev) {
            double dot = 0.0;
            for (std::size_t i = 0; i < dim; ++i) dot += v[i] * q[i * dim + prev];
            for (std::size_t i = 0; i < dim; ++i) v[i] -= dot * q[i * dim + prev];
        }
        double norm = 0.0;
        for (const double x : v) norm += x * x;
        norm = std::sqrt(norm);
        if (norm < 1e-12) return random_rotation(dim, rng);  // degenerate draw
        for (std::size_t i = 0; i < dim; ++i) q[i * dim + col] = v[i] / norm;
    }
    return q;
}

}  // namespace

TaskStream make_synthetic(std::size_t tasks, std::size_t per_task,
                          std::size_t dim, std::size_t classes,
                          std::uint64_t seed, std::size_t test_per_task) {
    if (dim < 2) throw ConfigError("make_synthetic: dim must be >= 2");
    if (classes < 2) throw ConfigError("make_synthetic: classes must be >= 2");
    TaskStream s;
    s.benchmark = "synthetic";
    s.input_dim = dim;
    s.classes = classes;
    Rng rng(derive_seed(seed, "synthetic"));

    // shared class-mean layout at radius 3; per-cluster noise sigma 0.5 keeps
    // every task linearly separable
    const double radius = 3.0;
    const double sigma = 0.5;
    std::vector<std::vector<double>> means(classes, std::vector<double>(dim));
    for (auto& m : means) {
        double norm = 0.0;
        for (double& x : m) {
            x = rng.gaussian();
            norm += x * x;
        }
        norm = std::sqrt(norm);
        for (double& x : m) x = x / norm * radius;
    }

    for (std::size_t t = 0; t < tasks; ++t) {
        Task task;
        task.transform.kind = TransformDesc::Kind::synthetic;
        task.transform.synth_seed = derive_seed(seed, "task" + std::to_string(t));
        Rng task_rng(task.transform.synth_seed);
        std::vector<double> rot;
        if (t > 0) rot = random_rotation(dim, task_rng);

        const auto rotated_mean = [&](std::size_t cls) {
            std::vector<double> m(dim);
            if (t == 0) {
                m = means[cls];
            } else {
                for (std::size_t i = 0; i < dim; ++i) {
                    double s2 = 0.0;
                    for (std::size_t j = 0; j < dim; ++j) {
                        s2 += rot[i * dim + j] * means[cls][j];
                    }
                    m[i] = s2;
                }
            }
            return m;
        };

        const auto draw = [&](std::size_t count, std::vector<Example>& out) {
            for (std::size_t n = 0; n < count; ++n) {
                const std::size_t cls = n % classes;  // balanced classes
                const auto m = rotated_mean(cls);
                Tensor x({dim});
                for (std::size_t i = 0; i < dim; ++i) {
                    x[i] = m[i] + sigma * task_rng.gaussian();
                }
                out.push_back({std::move(x), int(cls), int(t), -1});
            }
        };
        draw(per_task, task.train);
        draw(test_per_task, task.test);
        // balanced draw above is ordered by class; shuffle the train order
        task_rng.shuffle(task.train);
        s.tasks.push_back(std::move(task));
    }
    return s;
}

void iterate(const TaskStream& stream, const StreamSchedule& sched,
             std::uint64_t seed,
             const std::function<bool(std::size_t, const Batch&)>& on_batch,
             const std::function<void(std::size_t)>& on_task_end) {
    if (sched.batch_size == 0) throw ConfigError("batch_size must be >= 1");
    const std::size_t epochs =
        sched.pass_mode == PassMode::single ? 1 : std::max<std::size_t>(1, sched.epochs);
    Rng rng(derive_seed(seed, "iterate"));
    for (std::size_t t = 0; t < stream.tasks.size(); ++t) {
        const auto& task = stream.tasks[t];
        for (std::size_t ep = 0; ep < epochs; ++ep) {
            std::vector<std::size_t> order(task.train.size());
            std::iota(order.begin(), order.end(), 0);
            rng.shuffle(order);
            for (std::size_t start = 0; start < order.size();
                 start += sched.batch_size) {
                const std::size_t end =
                    std::min(order.size(), start + sched.batch_size);
                std::vector<Example> ex;
                ex.reserve(end - start);
                for (std::size_t i = start; i < end; ++i) {
                    ex.push_back(task.train[order[i]]);
                }
                if (!on_batch(t, Batch::from_examples(ex))) return;
            }
        }
        if (on_task_end) on_task_end(t);
    }
}

std::vector<std::pair<std::size_t, Batch>> materialize(
    const TaskStream& stream, const StreamSchedule& sched, std::uint64_t seed) {
    std::vector<std::pair<std::size_t, Batch>> out;
    iterate(stream, sched, seed, [&](std::size_t t, const Batch& b) {
        out.emplace_back(t, b);
        return true;
    });
    return out;
}

}  // namespace clrun
