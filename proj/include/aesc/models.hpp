#pragma once

// Semantic encoder/decoder architectures for MNIST and CIFAR-10, the frozen
// classifier that supplies penultimate features and recognition rates, and
// the self-describing model file format.
//
// Note on the MNIST encoder: the last convolution leaves a 16x2x2 map, so the
// linear layer that follows takes 64 input features (the published table
// lists 16). The decoder mirrors this by reshaping its 64 linear outputs to
// 16x2x2, so its first transposed convolution has 16 input channels.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "aesc/bytes.hpp"
#include "aesc/data.hpp"
#include "aesc/nn/network.hpp"
#include "aesc/nn/serialize.hpp"

namespace aesc::models {

using data::DatasetName;
using nn::Activation;
using nn::Architecture;

inline nn::Architecture mnist_encoder(std::size_t z) {
    return {"mnist-encoder",
            {1, 28, 28},
            {nn::conv2d(1, 16, 3, 2, 0, Activation::relu), nn::conv2d(16, 16, 3, 2, 0, Activation::relu),
             nn::conv2d(16, 16, 3, 2, 0, Activation::relu), nn::reshape({64}), nn::linear(64, z, Activation::relu)}};
}

inline nn::Architecture mnist_decoder(std::size_t z) {
    return {"mnist-decoder",
            {z},
            {nn::linear(z, 64, Activation::relu), nn::reshape({16, 2, 2}),
             nn::convtranspose2d(16, 16, 3, 2, 0, 1, Activation::relu),
             nn::convtranspose2d(16, 16, 3, 2, 0, 0, Activation::relu),
             nn::convtranspose2d(16, 1, 3, 2, 0, 1, Activation::sigmoid)}};
}

// 3x3 stride-1 convolutions use padding 1, 4x4 stride-2 ones padding 0, so
// the code is z x 6 x 6.
inline nn::Architecture cifar_encoder(std::size_t z) {
    return {"cifar10-encoder",
            {3, 32, 32},
            {nn::conv2d(3, 32, 4, 2, 0, Activation::relu), nn::conv2d(32, 64, 3, 1, 1, Activation::relu),
             nn::conv2d(64, 128, 3, 1, 1, Activation::relu), nn::conv2d(128, 256, 3, 1, 1, Activation::relu),
             nn::conv2d(256, 128, 4, 2, 0, Activation::relu), nn::conv2d(128, 64, 3, 1, 1, Activation::relu),
             nn::conv2d(64, 32, 3, 1, 1, Activation::relu), nn::conv2d(32, z, 3, 1, 1, Activation::relu)}};
}

inline nn::Architecture cifar_decoder(std::size_t z) {
    return {"cifar10-decoder",
            {z, 6, 6},
            {nn::convtranspose2d(z, 64, 4, 2, 0, 1, Activation::relu), nn::conv2d(64, 128, 3, 1, 1, Activation::relu),
             nn::conv2d(128, 128, 3, 1, 1, Activation::relu),
             nn::convtranspose2d(128, 128, 4, 2, 0, 0, Activation::relu),
             nn::conv2d(128, 64, 3, 1, 1, Activation::relu), nn::conv2d(64, 32, 3, 1, 1, Activation::relu),
             nn::conv2d(32, 3, 3, 1, 1, Activation::sigmoid)}};
}

struct AutoencoderSpec {
    DatasetName dataset = DatasetName::mnist;
    std::size_t z_dims = 0;
    Architecture encoder;
    Architecture decoder;

    Shape code_shape() const { return dataset == DatasetName::mnist ? Shape{z_dims} : Shape{z_dims, 6, 6}; }
};

inline AutoencoderSpec autoencoder_spec(DatasetName d, std::size_t z) {
    if (z == 0) throw UsageError("z_dims must be at least 1");
    AutoencoderSpec s{d, z, d == DatasetName::mnist ? mnist_encoder(z) : cifar_encoder(z),
                      d == DatasetName::mnist ? mnist_decoder(z) : cifar_decoder(z)};
    if (s.encoder.output_shape() != s.code_shape() || s.decoder.input_shape != s.code_shape() ||
        s.decoder.output_shape() != data::image_shape(d))
        throw ShapeError("autoencoder shape chain broken for z_dims " + std::to_string(z));
    return s;
}

// Architecture tag carried in frames; receivers look up the decoder family by it.
inline std::uint16_t model_id(DatasetName d) { return static_cast<std::uint16_t>(d); }

inline DatasetName dataset_from_model_id(std::uint16_t id) {
    if (id == 1) return DatasetName::mnist;
    if (id == 2) return DatasetName::cifar10;
    throw FormatError("unknown model id " + std::to_string(id));
}

struct SemanticCode {
    Tensor values;
    std::uint16_t model_id = 0;
};

struct Autoencoder {
    AutoencoderSpec spec;
    nn::Network<float> encoder;
    nn::Network<float> decoder;
};

inline Autoencoder build_autoencoder(DatasetName d, std::size_t z, std::uint64_t seed) {
    AutoencoderSpec spec = autoencoder_spec(d, z);
    nn::Network<float> enc(spec.encoder, nn::init_params<float>(spec.encoder, derive_seed(seed, {1})));
    nn::Network<float> dec(spec.decoder, nn::init_params<float>(spec.decoder, derive_seed(seed, {2})));
    return {std::move(spec), std::move(enc), std::move(dec)};
}

inline SemanticCode encode(const Tensor& image, const Autoencoder& ae) {
    if (image.shape() != ae.spec.encoder.input_shape)
        throw ShapeError("encode: image " + shape_str(image.shape()) + " does not match " +
                         shape_str(ae.spec.encoder.input_shape));
    return {ae.encoder.forward(image), model_id(ae.spec.dataset)};
}

// Batched encode: (N, C, H, W) -> (N, ...code_shape).
inline Tensor encode_batch(const Tensor& images, const Autoencoder& ae) { return ae.encoder.forward(images); }

inline Tensor decode(const Tensor& code, const nn::Network<float>& decoder) {
    if (code.shape() != decoder.architecture().input_shape)
        throw ShapeError("decode: code " + shape_str(code.shape()) + " does not match " +
                         shape_str(decoder.architecture().input_shape));
    return decoder.forward(code);
}

inline Tensor decode(const SemanticCode& code, const Autoencoder& ae) { return decode(code.values, ae.decoder); }

// ---- classifier ----

inline Architecture classifier_architecture(DatasetName d) {
    if (d == DatasetName::mnist)
        return {"mnist-classifier",
                {1, 28, 28},
                {nn::conv2d(1, 32, 3, 1, 1, Activation::relu), nn::maxpool2d(2),
                 nn::conv2d(32, 64, 3, 1, 1, Activation::relu), nn::maxpool2d(2), nn::reshape({3136}),
                 nn::linear(3136, 128, Activation::relu), nn::linear(128, 10, Activation::none)}};
    return {"cifar10-classifier",
            {3, 32, 32},
            {nn::conv2d(3, 32, 3, 1, 1, Activation::relu), nn::maxpool2d(2), nn::conv2d(32, 64, 3, 1, 1, Activation::relu),
             nn::maxpool2d(2), nn::conv2d(64, 128, 3, 1, 1, Activation::relu), nn::maxpool2d(2), nn::reshape({2048}),
             nn::linear(2048, 256, Activation::relu), nn::linear(256, 10, Activation::none)}};
}

template <typename T>
struct BasicClassifier {
    DatasetName dataset = DatasetName::mnist;
    nn::Network<T> net;
    bool trained = false;

    // Layers up to and including the penultimate (feature) layer.
    std::size_t feature_layers() const { return net.layer_count() - 1; }
    std::size_t penultimate_dim() const { return net.shapes()[feature_layers()][0]; }

    void require_trained(const char* what) const {
        if (!trained) throw UsageError(std::string(what) + " requires a trained classifier");
    }

    // Penultimate activations, (N, penultimate_dim) or (penultimate_dim).
    BasicTensor<T> features(const BasicTensor<T>& images, nn::Trace<T>* trace = nullptr) const {
        require_trained("penultimate_features");
        return net.forward(images, trace, feature_layers());
    }

    BasicTensor<T> logits(const BasicTensor<T>& images) const { return net.forward(images); }
};

using Classifier = BasicClassifier<float>;

inline Classifier build_classifier(DatasetName d, std::uint64_t seed) {
    const Architecture arch = classifier_architecture(d);
    return {d, nn::Network<float>(arch, nn::init_params<float>(arch, derive_seed(seed, {3}))), false};
}

// Index of the largest value; ties resolve to the lowest index.
template <typename T>
std::uint8_t argmax(std::span<const T> logits) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i)
        if (logits[i] > logits[best]) best = i;
    return static_cast<std::uint8_t>(best);
}

// Predicted labels for a batch (N, C, H, W).
inline std::vector<std::uint8_t> classify_batch(const Tensor& images, const Classifier& c, std::size_t chunk = 256) {
    const std::size_t n = images.dim(0), per = shape_size(c.net.shapes().front());
    std::vector<std::uint8_t> out;
    out.reserve(n);
    for (std::size_t start = 0; start < n; start += chunk) {
        const std::size_t m = std::min(chunk, n - start);
        Shape s = c.net.shapes().front();
        s.insert(s.begin(), m);
        Tensor part(s, std::vector<float>(images.storage().begin() + static_cast<std::ptrdiff_t>(start * per),
                                          images.storage().begin() + static_cast<std::ptrdiff_t>((start + m) * per)));
        const Tensor lg = c.logits(part);
        for (std::size_t i = 0; i < m; ++i) out.push_back(argmax<float>(lg.data().subspan(i * 10, 10)));
    }
    return out;
}

inline std::uint8_t classify(const Tensor& image, const Classifier& c) {
    return argmax<float>(c.logits(image).data());
}

inline Tensor penultimate_features(const Tensor& images, const Classifier& c) { return c.features(images); }

// ---- model files ----
//
//   "AESM" | version u16 | role u8 | dataset u8 | z_dims u32 | trained u8 |
//   input rank u8 | extents u32[] | layer count u16 |
//   per layer: kind u8 | in u32 | out u32 | kh kw sh sw ph pw oh ow u16 | activation u8 | target rank u8 | extents u32[] |
//   parameter blob length u32 | parameter blob ("AESC" format) | CRC32 u32 over all preceding bytes

enum class ModelRole : std::uint8_t { encoder = 1, decoder = 2, classifier = 3 };

struct ModelFile {
    ModelRole role = ModelRole::encoder;
    DatasetName dataset = DatasetName::mnist;
    std::uint32_t z_dims = 0;
    bool trained = true;
    Architecture arch;
    nn::ParamSet<float> params;
};

inline constexpr std::uint16_t kModelFormatVersion = 1;

inline void write_architecture(ByteWriter& w, const Architecture& arch) {
    auto put_shape = [&](const Shape& s) {
        w.put<std::uint8_t>(static_cast<std::uint8_t>(s.size()));
        for (auto d : s) w.put<std::uint32_t>(static_cast<std::uint32_t>(d));
    };
    put_shape(arch.input_shape);
    w.put<std::uint16_t>(static_cast<std::uint16_t>(arch.layers.size()));
    for (const auto& l : arch.layers) {
        w.put<std::uint8_t>(static_cast<std::uint8_t>(l.kind));
        w.put<std::uint32_t>(static_cast<std::uint32_t>(l.in));
        w.put<std::uint32_t>(static_cast<std::uint32_t>(l.out));
        for (auto v : {l.kernel.h, l.kernel.w, l.stride.h, l.stride.w, l.padding.h, l.padding.w, l.output_padding.h,
                       l.output_padding.w})
            w.put<std::uint16_t>(static_cast<std::uint16_t>(v));
        w.put<std::uint8_t>(static_cast<std::uint8_t>(l.activation));
        put_shape(l.target);
    }
}

inline Architecture read_architecture(ByteReader& r, std::string name) {
    auto get_shape = [&] {
        Shape s(r.get<std::uint8_t>());
        for (auto& d : s) d = r.get<std::uint32_t>();
        return s;
    };
    Architecture arch{std::move(name), get_shape(), {}};
    const auto count = r.get<std::uint16_t>();
    for (std::uint16_t i = 0; i < count; ++i) {
        nn::LayerSpec l;
        const auto kind = r.get<std::uint8_t>();
        if (kind > static_cast<std::uint8_t>(nn::LayerKind::reshape)) throw FormatError("model file: bad layer kind");
        l.kind = static_cast<nn::LayerKind>(kind);
        l.in = r.get<std::uint32_t>();
        l.out = r.get<std::uint32_t>();
        for (std::size_t* v : {&l.kernel.h, &l.kernel.w, &l.stride.h, &l.stride.w, &l.padding.h, &l.padding.w,
                               &l.output_padding.h, &l.output_padding.w})
            *v = r.get<std::uint16_t>();
        const auto act = r.get<std::uint8_t>();
        if (act > static_cast<std::uint8_t>(Activation::sigmoid)) throw FormatError("model file: bad activation");
        l.activation = static_cast<Activation>(act);
        l.target = get_shape();
        arch.layers.push_back(std::move(l));
    }
    arch.shapes();
    return arch;
}

inline Bytes serialize_model(const ModelFile& m) {
    ByteWriter w;
    w.put_tag("AESM");
    w.put<std::uint16_t>(kModelFormatVersion);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(m.role));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(m.dataset));
    w.put<std::uint32_t>(m.z_dims);
    w.put<std::uint8_t>(m.trained ? 1 : 0);
    write_architecture(w, m.arch);
    const Bytes blob = nn::serialize_params(m.params);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(blob.size()));
    w.put_bytes(blob);
    w.put<std::uint32_t>(crc32_ieee(w.bytes()));
    return w.take();
}

inline ModelFile parse_model(std::span<const std::uint8_t> bytes, const std::string& what = "model file") {
    if (bytes.size() < 4) throw FormatError(what + ": truncated");
    const auto body = bytes.first(bytes.size() - 4);
    std::uint32_t stored = 0;
    std::memcpy(&stored, bytes.data() + body.size(), 4);
    if (crc32_ieee(body) != stored) throw FormatError(what + ": checksum mismatch");
    ByteReader r(body, what);
    r.expect_tag("AESM");
    if (r.get<std::uint16_t>() != kModelFormatVersion) throw FormatError(what + ": unsupported version");
    ModelFile m;
    const auto role = r.get<std::uint8_t>();
    if (role < 1 || role > 3) throw FormatError(what + ": bad role");
    m.role = static_cast<ModelRole>(role);
    const auto ds = r.get<std::uint8_t>();
    if (ds < 1 || ds > 2) throw FormatError(what + ": bad dataset id");
    m.dataset = static_cast<DatasetName>(ds);
    m.z_dims = r.get<std::uint32_t>();
    m.trained = r.get<std::uint8_t>() != 0;
    const char* role_name = m.role == ModelRole::encoder ? "encoder" : m.role == ModelRole::decoder ? "decoder" : "classifier";
    m.arch = read_architecture(r, std::string(data::dataset_name(m.dataset)) + "-" + role_name);
    const auto len = r.get<std::uint32_t>();
    m.params = nn::deserialize_params(r.get_bytes(len), m.arch);
    if (r.remaining() != 0) throw FormatError(what + ": trailing bytes");
    return m;
}

inline std::uint32_t model_checksum(std::span<const std::uint8_t> file_bytes) { return crc32_ieee(file_bytes); }

inline void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw Error("cannot write " + path.string());
}

inline Bytes read_bytes(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open " + path.string());
    return Bytes(std::istreambuf_iterator<char>(f), {});
}

inline void save_model(const std::filesystem::path& path, const ModelFile& m) { write_bytes(path, serialize_model(m)); }
inline ModelFile load_model(const std::filesystem::path& path) { return parse_model(read_bytes(path), path.string()); }

inline ModelFile to_model_file(const Autoencoder& ae, ModelRole role) {
    const auto& net = role == ModelRole::encoder ? ae.encoder : ae.decoder;
    return {role, ae.spec.dataset, static_cast<std::uint32_t>(ae.spec.z_dims), true, net.architecture(), net.params()};
}

inline ModelFile to_model_file(const Classifier& c) {
    return {ModelRole::classifier, c.dataset, 0, c.trained, c.net.architecture(), c.net.params()};
}

inline Classifier classifier_from_file(const ModelFile& m) {
    if (m.role != ModelRole::classifier) throw FormatError("model file is not a classifier");
    if (m.arch.layers != classifier_architecture(m.dataset).layers)
        throw FormatError("classifier file architecture does not match the canonical classifier");
    return {m.dataset, nn::Network<float>(m.arch, m.params), m.trained};
}

inline Autoencoder autoencoder_from_files(const ModelFile& enc, const ModelFile& dec) {
    if (enc.role != ModelRole::encoder || dec.role != ModelRole::decoder) throw FormatError("expected encoder and decoder files");
    if (enc.dataset != dec.dataset || enc.z_dims != dec.z_dims) throw FormatError("encoder and decoder files disagree");
    AutoencoderSpec spec = autoencoder_spec(enc.dataset, enc.z_dims);
    if (spec.encoder.layers != enc.arch.layers || spec.decoder.layers != dec.arch.layers)
        throw FormatError("model file architecture does not match the canonical autoencoder");
    return {spec, nn::Network<float>(spec.encoder, enc.params), nn::Network<float>(spec.decoder, dec.params)};
}

} // namespace aesc::models
