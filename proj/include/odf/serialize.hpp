// Versioned little-endian binary formats:
//   ODFD  ray dataset      (header, then per-source position + P distances)
//   ODFV  visibility tests (header, then s/t/label records)
//   ODFM  model atlas      (scheme, then per-partition encoders + MLP)
//
// All payload tensors are float32. Directions are not stored in ODFD; the
// lattice parameter regenerates them. Readers reject unknown magics and
// versions loudly and report the byte offset (and record index where
// meaningful) on truncation. Loading an atlas and re-serializing it is
// byte-identical.
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "odf/dataset.hpp"
#include "odf/errors.hpp"
#include "odf/model.hpp"
#include "odf/train.hpp"

namespace odf {

static_assert(std::endian::native == std::endian::little,
              "serialization assumes a little-endian host");
static_assert(sizeof(float) == 4 && sizeof(double) == 8);

inline constexpr std::uint32_t kDatasetVersion = 1;
inline constexpr std::uint32_t kTestSetVersion = 1;
inline constexpr std::uint32_t kModelVersion = 1;
// z-up, latitude from the equator, longitude from +x toward +y.
inline constexpr std::uint8_t kAxisConventionZUp = 0;

namespace io {

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}

    void bytes(const void* p, std::size_t n) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
        offset_ += n;
    }
    void u8(std::uint8_t v) { bytes(&v, 1); }
    void u32(std::uint32_t v) { bytes(&v, 4); }
    void u64(std::uint64_t v) { bytes(&v, 8); }
    void f32(float v) { bytes(&v, 4); }
    void f64(double v) { bytes(&v, 8); }
    void magic(const char m[4]) { bytes(m, 4); }
    void f32_array(const float* p, std::size_t n) {
        bytes(p, n * 4);
        f32_payload_ += n;
    }
    void f32_from_f64(const std::vector<double>& v) {
        buf_.resize(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) buf_[i] = static_cast<float>(v[i]);
        f32_array(buf_.data(), buf_.size());
    }
    void vec3_f32(const Vec3& v) {
        const float c[3] = {static_cast<float>(v.x), static_cast<float>(v.y), static_cast<float>(v.z)};
        f32_array(c, 3);
    }
    void vec3_f64(const Vec3& v) {
        f64(v.x);
        f64(v.y);
        f64(v.z);
    }

    std::uint64_t offset() const { return offset_; }
    std::uint64_t f32_payload_count() const { return f32_payload_; }

private:
    std::ostream& out_;
    std::uint64_t offset_ = 0;
    std::uint64_t f32_payload_ = 0;
    std::vector<float> buf_;
};

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    void set_context(std::string ctx) { context_ = std::move(ctx); }

    void bytes(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) {
            std::string what = "truncated file at offset " + std::to_string(offset_);
            if (!context_.empty()) what += " while reading " + context_;
            throw DataError(what);
        }
        offset_ += n;
    }
    std::uint8_t u8() {
        std::uint8_t v;
        bytes(&v, 1);
        return v;
    }
    std::uint32_t u32() {
        std::uint32_t v;
        bytes(&v, 4);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        bytes(&v, 8);
        return v;
    }
    float f32() {
        float v;
        bytes(&v, 4);
        return v;
    }
    double f64() {
        double v;
        bytes(&v, 8);
        return v;
    }
    void expect_magic(const char m[4], const char* kind) {
        char got[4];
        bytes(got, 4);
        if (std::memcmp(got, m, 4) != 0)
            throw DataError(std::string("magic mismatch: not a ") + kind + " file");
    }
    void expect_version(std::uint32_t supported, const char* kind) {
        const std::uint32_t v = u32();
        if (v != supported)
            throw DataError(std::string(kind) + " version " + std::to_string(v) +
                            " is not supported (reader supports version " +
                            std::to_string(supported) + ")");
    }
    void f32_array(float* p, std::size_t n) { bytes(p, n * 4); }
    void f64_from_f32(std::vector<double>& v, std::size_t n) {
        buf_.resize(n);
        f32_array(buf_.data(), n);
        v.resize(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<double>(buf_[i]);
    }
    Vec3 vec3_f32() {
        float c[3];
        f32_array(c, 3);
        return {c[0], c[1], c[2]};
    }
    Vec3 vec3_f64() {
        Vec3 v;
        v.x = f64();
        v.y = f64();
        v.z = f64();
        return v;
    }

    std::uint64_t offset() const { return offset_; }

private:
    std::istream& in_;
    std::uint64_t offset_ = 0;
    std::string context_;
    std::vector<float> buf_;
};

}  // namespace io

// --------------------------------------------------------------------------
// ODFD ray dataset
// --------------------------------------------------------------------------

inline void write_dataset(const RayDataset& ds, std::ostream& out) {
    io::Writer w(out);
    w.magic("ODFD");
    w.u32(kDatasetVersion);
    w.u8(kAxisConventionZUp);
    w.u32(ds.lattice_n);
    w.f32(ds.clamp_distance);
    w.u64(ds.scene_hash);
    w.u64(ds.sources.size());
    const std::size_t p = ds.directions_per_source();
    for (std::size_t s = 0; s < ds.sources.size(); ++s) {
        w.vec3_f32(ds.sources[s]);
        w.f32_array(ds.record(s), p);
    }
}

inline RayDataset read_dataset(std::istream& in) {
    io::Reader r(in);
    r.set_context("ODFD header");
    r.expect_magic("ODFD", "ray dataset (ODFD)");
    r.expect_version(kDatasetVersion, "ray dataset");
    const std::uint8_t axis = r.u8();
    if (axis != kAxisConventionZUp)
        throw DataError("unknown axis convention " + std::to_string(axis));
    RayDataset ds;
    ds.lattice_n = r.u32();
    ds.clamp_distance = r.f32();
    ds.scene_hash = r.u64();
    const std::uint64_t n_sources = r.u64();
    const std::size_t p = 2 * static_cast<std::size_t>(ds.lattice_n) + 1;
    ds.sources.resize(n_sources);
    ds.distances.resize(n_sources * p);
    for (std::uint64_t s = 0; s < n_sources; ++s) {
        r.set_context("record " + std::to_string(s));
        ds.sources[s] = r.vec3_f32();
        r.f32_array(&ds.distances[s * p], p);
        for (std::size_t d = 0; d < p; ++d) {
            const float v = ds.distances[s * p + d];
            if (!(v > 0.0f) || v > ds.clamp_distance)
                throw DataError("record " + std::to_string(s) + ": distance " + std::to_string(v) +
                                " outside (0, clamp]");
        }
    }
    return ds;
}

// --------------------------------------------------------------------------
// ODFV visibility test set
// --------------------------------------------------------------------------

inline void write_test_set(const VisibilityTestSet& ts, std::ostream& out) {
    io::Writer w(out);
    w.magic("ODFV");
    w.u32(kTestSetVersion);
    w.u64(ts.scene_hash);
    w.u64(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) {
        w.vec3_f32(ts.sources[i]);
        w.vec3_f32(ts.targets[i]);
        w.u8(ts.labels[i]);
    }
}

inline VisibilityTestSet read_test_set(std::istream& in) {
    io::Reader r(in);
    r.set_context("ODFV header");
    r.expect_magic("ODFV", "visibility test set (ODFV)");
    r.expect_version(kTestSetVersion, "visibility test set");
    VisibilityTestSet ts;
    ts.scene_hash = r.u64();
    const std::uint64_t n = r.u64();
    ts.sources.resize(n);
    ts.targets.resize(n);
    ts.labels.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        r.set_context("record " + std::to_string(i));
        ts.sources[i] = r.vec3_f32();
        ts.targets[i] = r.vec3_f32();
        const std::uint8_t label = r.u8();
        if (label > 1)
            throw DataError("record " + std::to_string(i) + ": label " + std::to_string(label) +
                            " is not boolean");
        ts.labels[i] = label;
    }
    return ts;
}

// --------------------------------------------------------------------------
// ODFM model atlas
// --------------------------------------------------------------------------

namespace detail {

inline void write_model(io::Writer& w, const OdfPartitionModel& m) {
    w.u32(m.partition_id);
    w.vec3_f64(m.box.min);
    w.vec3_f64(m.box.max);
    const OdfModelConfig& cfg = m.config;
    w.u8(static_cast<std::uint8_t>(cfg.pos_kind));
    switch (cfg.pos_kind) {
        case PosEncoderKind::None:
            break;
        case PosEncoderKind::Pe:
            w.u32(cfg.pe.n_freq);
            break;
        case PosEncoderKind::Hash3D:
            w.u32(cfg.hash_levels);
            w.u32(cfg.hash_features);
            w.u32(cfg.hash_log2_table);
            w.u32(cfg.hash_res_min);
            w.u32(cfg.hash_res_max);
            for (int i = 0; i < 3; ++i) w.u32(m.hash.primes[i]);
            w.f32_from_f64(m.hash.features());
            break;
        case PosEncoderKind::Ffm:
            w.u32(cfg.ffm_features);
            w.f64(cfg.ffm_sigma);
            w.u64(m.ffm.seed);
            w.u32(m.ffm.input_dim);
            w.f32_from_f64(m.ffm.matrix);
            break;
    }
    w.u8(static_cast<std::uint8_t>(cfg.dir_kind));
    switch (cfg.dir_kind) {
        case DirEncoderKind::None:
            break;
        case DirEncoderKind::Grid2D:
            w.u8(static_cast<std::uint8_t>(cfg.projection));
            w.u32(cfg.grid_levels);
            w.u32(cfg.grid_features);
            w.u32(cfg.grid_coarsest_u);
            w.u32(cfg.grid_coarsest_v);
            w.u32(cfg.grid_finest_u);
            w.u32(cfg.grid_finest_v);
            w.f32_from_f64(m.grid.features());
            break;
        case DirEncoderKind::Sh:
            w.u32(cfg.sh.degree);
            break;
    }
    w.u32(cfg.mlp.hidden_width);
    w.u32(cfg.mlp.hidden_layers);
    w.u32(static_cast<std::uint32_t>(m.mlp.layers().size()));
    for (const Mlp::Layer& l : m.mlp.layers()) {
        w.u32(l.in);
        w.u32(l.out);
        w.f32_from_f64(l.weights);
        w.f32_from_f64(l.bias);
    }
    w.u64(m.meta.seed);
    w.f32(m.meta.learning_rate);
    w.u32(m.meta.epochs);
    w.u32(m.meta.batch_size);
    w.f32(m.meta.weight_decay);
    w.f32(m.meta.final_mse);
}

inline OdfPartitionModel read_model(io::Reader& r, PartitionKind kind, double clamp) {
    OdfPartitionModel m;
    m.partition_kind = kind;
    m.clamp_distance = clamp;
    m.partition_id = r.u32();
    m.box.min = r.vec3_f64();
    m.box.max = r.vec3_f64();
    OdfModelConfig& cfg = m.config;
    cfg.pos_kind = static_cast<PosEncoderKind>(r.u8());
    switch (cfg.pos_kind) {
        case PosEncoderKind::None:
            break;
        case PosEncoderKind::Pe:
            cfg.pe.n_freq = r.u32();
            break;
        case PosEncoderKind::Hash3D: {
            cfg.hash_levels = r.u32();
            cfg.hash_features = r.u32();
            cfg.hash_log2_table = r.u32();
            cfg.hash_res_min = r.u32();
            cfg.hash_res_max = r.u32();
            std::uint32_t primes[3];
            for (int i = 0; i < 3; ++i) primes[i] = r.u32();
            m.hash = HashGrid3D::create(cfg.hash_levels, cfg.hash_features, cfg.hash_log2_table,
                                        cfg.hash_res_min, cfg.hash_res_max, 0);
            for (int i = 0; i < 3; ++i) m.hash.primes[i] = primes[i];
            r.f64_from_f32(m.hash.features(), m.hash.features().size());
            break;
        }
        case PosEncoderKind::Ffm: {
            cfg.ffm_features = r.u32();
            cfg.ffm_sigma = r.f64();
            const std::uint64_t seed = r.u64();
            const std::uint32_t input_dim = r.u32();
            m.ffm.n_features = cfg.ffm_features;
            m.ffm.sigma = cfg.ffm_sigma;
            m.ffm.seed = seed;
            m.ffm.input_dim = input_dim;
            r.f64_from_f32(m.ffm.matrix, static_cast<std::size_t>(cfg.ffm_features) * input_dim);
            break;
        }
        default:
            throw DataError("unknown position encoder tag");
    }
    cfg.dir_kind = static_cast<DirEncoderKind>(r.u8());
    switch (cfg.dir_kind) {
        case DirEncoderKind::None:
            break;
        case DirEncoderKind::Grid2D: {
            cfg.projection = static_cast<Projection>(r.u8());
            cfg.grid_levels = r.u32();
            cfg.grid_features = r.u32();
            cfg.grid_coarsest_u = r.u32();
            cfg.grid_coarsest_v = r.u32();
            cfg.grid_finest_u = r.u32();
            cfg.grid_finest_v = r.u32();
            m.grid = MultiResGrid2D::create(cfg.projection, cfg.grid_levels, cfg.grid_features,
                                            cfg.grid_coarsest_u, cfg.grid_coarsest_v,
                                            cfg.grid_finest_u, cfg.grid_finest_v, 0);
            r.f64_from_f32(m.grid.features(), m.grid.features().size());
            break;
        }
        case DirEncoderKind::Sh:
            cfg.sh.degree = r.u32();
            break;
        default:
            throw DataError("unknown direction encoder tag");
    }
    cfg.mlp.hidden_width = r.u32();
    cfg.mlp.hidden_layers = r.u32();
    const std::uint32_t n_layers = r.u32();
    std::vector<std::uint32_t> sizes;
    std::vector<Mlp::Layer> layers(n_layers);
    for (std::uint32_t li = 0; li < n_layers; ++li) {
        layers[li].in = r.u32();
        layers[li].out = r.u32();
        r.f64_from_f32(layers[li].weights, static_cast<std::size_t>(layers[li].in) * layers[li].out);
        r.f64_from_f32(layers[li].bias, layers[li].out);
        if (li == 0) sizes.push_back(layers[li].in);
        sizes.push_back(layers[li].out);
    }
    m.mlp = Mlp(sizes);
    m.mlp.layers() = std::move(layers);
    if (m.mlp.input_width() != cfg.input_dim())
        throw DataError("model invariant violated: encoder widths (" +
                        std::to_string(cfg.input_dim()) + ") do not match MLP input (" +
                        std::to_string(m.mlp.input_width()) + ")");
    m.meta.seed = r.u64();
    m.meta.learning_rate = r.f32();
    m.meta.epochs = r.u32();
    m.meta.batch_size = r.u32();
    m.meta.weight_decay = r.f32();
    m.meta.final_mse = r.f32();
    m.finalize();
    return m;
}

}  // namespace detail

inline void write_atlas(const OdfAtlas& atlas, std::ostream& out,
                        std::uint64_t* f32_payload_count = nullptr) {
    io::Writer w(out);
    w.magic("ODFM");
    w.u32(kModelVersion);
    w.u8(kAxisConventionZUp);
    w.u64(atlas.scene_hash);
    w.f64(atlas.clamp_distance);
    const PartitionScheme& s = atlas.scheme;
    w.u8(static_cast<std::uint8_t>(s.kind));
    w.vec3_f64(s.origin);
    w.vec3_f64(s.cell_size);
    for (int a = 0; a < 3; ++a) w.u32(s.dims[a]);
    w.vec3_f64(s.domain.min);
    w.vec3_f64(s.domain.max);
    w.u64(s.active_count());
    for (PartitionId id : s.active_cells()) w.u32(id);
    for (const OdfPartitionModel& m : atlas.models()) detail::write_model(w, m);
    if (f32_payload_count) *f32_payload_count = w.f32_payload_count();
}

inline OdfAtlas read_atlas(std::istream& in) {
    io::Reader r(in);
    r.set_context("ODFM header");
    r.expect_magic("ODFM", "model atlas (ODFM)");
    r.expect_version(kModelVersion, "model atlas");
    const std::uint8_t axis = r.u8();
    if (axis != kAxisConventionZUp)
        throw DataError("unknown axis convention " + std::to_string(axis));
    OdfAtlas atlas;
    atlas.scene_hash = r.u64();
    atlas.clamp_distance = r.f64();
    PartitionScheme s;
    s.kind = static_cast<PartitionKind>(r.u8());
    s.origin = r.vec3_f64();
    s.cell_size = r.vec3_f64();
    for (int a = 0; a < 3; ++a) s.dims[a] = r.u32();
    s.domain.min = r.vec3_f64();
    s.domain.max = r.vec3_f64();
    const std::uint64_t active = r.u64();
    std::vector<PartitionId> ids(active);
    for (std::uint64_t i = 0; i < active; ++i) ids[i] = r.u32();
    s.set_active_cells(std::move(ids));
    atlas.scheme = s;
    atlas.models().reserve(active);
    for (std::uint64_t i = 0; i < active; ++i) {
        r.set_context("partition model " + std::to_string(i));
        atlas.models().push_back(detail::read_model(r, s.kind, atlas.clamp_distance));
        if (atlas.models().back().partition_id != atlas.scheme.active_cells()[i])
            throw DataError("partition model order does not match the scheme's active cells");
    }
    return atlas;
}

// --------------------------------------------------------------------------
// path helpers + header inspection
// --------------------------------------------------------------------------

namespace detail {

inline std::ifstream open_input(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open '" + path + "' for reading");
    return f;
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open '" + path + "' for writing");
    return f;
}

}  // namespace detail

inline void save_dataset(const RayDataset& ds, const std::string& path) {
    auto f = detail::open_output(path);
    write_dataset(ds, f);
    if (!f) throw InputError("write failed for '" + path + "'");
}
inline RayDataset load_dataset(const std::string& path) {
    auto f = detail::open_input(path);
    return read_dataset(f);
}
inline void save_test_set(const VisibilityTestSet& ts, const std::string& path) {
    auto f = detail::open_output(path);
    write_test_set(ts, f);
    if (!f) throw InputError("write failed for '" + path + "'");
}
inline VisibilityTestSet load_test_set(const std::string& path) {
    auto f = detail::open_input(path);
    return read_test_set(f);
}
inline void save_atlas(const OdfAtlas& atlas, const std::string& path) {
    auto f = detail::open_output(path);
    write_atlas(atlas, f);
    if (!f) throw InputError("write failed for '" + path + "'");
}
inline OdfAtlas load_atlas(const std::string& path) {
    auto f = detail::open_input(path);
    return read_atlas(f);
}

// Human/machine-readable header summary ("inspect" subcommand).
inline std::string inspect_file(const std::string& path) {
    auto f = detail::open_input(path);
    char magic[4];
    f.read(magic, 4);
    if (f.gcount() != 4) throw DataError("file too short to hold a magic");
    f.seekg(0);
    std::ostringstream out;
    const std::string kind(magic, 4);
    if (kind == "ODFD") {
        const RayDataset ds = read_dataset(f);
        out << "{\"format\":\"ODFD\",\"version\":" << kDatasetVersion
            << ",\"lattice_n\":" << ds.lattice_n
            << ",\"directions_per_source\":" << ds.directions_per_source()
            << ",\"clamp\":" << ds.clamp_distance << ",\"scene_hash\":\"" << std::hex
            << ds.scene_hash << std::dec << "\",\"sources\":" << ds.sources.size() << "}";
    } else if (kind == "ODFV") {
        const VisibilityTestSet ts = read_test_set(f);
        out << "{\"format\":\"ODFV\",\"version\":" << kTestSetVersion
            << ",\"records\":" << ts.size() << ",\"positives\":" << ts.positives()
            << ",\"scene_hash\":\"" << std::hex << ts.scene_hash << std::dec << "\"}";
    } else if (kind == "ODFM") {
        const OdfAtlas atlas = read_atlas(f);
        std::size_t params = 0;
        for (const auto& m : atlas.models()) params += m.learnable_parameter_count();
        out << "{\"format\":\"ODFM\",\"version\":" << kModelVersion
            << ",\"partitions\":" << atlas.models().size() << ",\"clamp\":" << atlas.clamp_distance
            << ",\"scene_hash\":\"" << std::hex << atlas.scene_hash << std::dec
            << "\",\"learnable_parameters\":" << params << "}";
    } else {
        throw DataError("unrecognized magic '" + kind + "'");
    }
    return out.str();
}

}  // namespace odf
