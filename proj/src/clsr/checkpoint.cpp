#include "clsr/checkpoint.hpp"

#include <filesystem>
#include <fstream>
#include <iterator>

#include "clsr/binary_io.hpp"

namespace clsr {

namespace bin {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open " + path);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, std::string_view data) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  require(static_cast<bool>(out), ErrorKind::Io, "write failed: " + path);
}

}  // namespace bin

std::string checkpoint_bytes(const Encoder& model) {
  require(model.normalization_ready(), ErrorKind::State, "cannot save a model without normalization statistics");
  const ModelConfig& cfg = model.config();
  bin::Writer w;
  w.bytes("CLSR");
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(cfg.steps));
  w.u32(static_cast<std::uint32_t>(cfg.channels));
  w.u32(static_cast<std::uint32_t>(cfg.embedding));
  w.u32(static_cast<std::uint32_t>(cfg.kernel));
  w.u32(static_cast<std::uint32_t>(cfg.conv_widths.size()));
  for (auto width : cfg.conv_widths) w.u32(static_cast<std::uint32_t>(width));
  w.u32(static_cast<std::uint32_t>(cfg.dense_units));
  w.f32(cfg.dropout);
  w.f32(cfg.bn_epsilon);
  w.f32(cfg.bn_momentum);
  for (std::size_t c = 0; c < cfg.channels; ++c) w.f32(model.normalization().mean()(0, static_cast<Eigen::Index>(c)));
  for (std::size_t c = 0; c < cfg.channels; ++c)
    w.f32(model.normalization().stddev()(0, static_cast<Eigen::Index>(c)));

  const auto tensors = model.tensors();
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto* p : tensors) {
    w.u32(static_cast<std::uint32_t>(p->shape.size()));
    for (auto d : p->shape) w.u32(static_cast<std::uint32_t>(d));
    for (std::size_t i = 0; i < p->size(); ++i) w.f32(p->data()[i]);
  }
  return w.take();
}

Encoder checkpoint_from_bytes(std::string_view bytes) {
  bin::Reader r(bytes, "checkpoint");
  require(r.bytes(4) == "CLSR", ErrorKind::Format, "not a checkpoint (bad magic)");
  const auto version = r.u32();
  require(version == kCheckpointVersion, ErrorKind::Format,
          "checkpoint version " + std::to_string(version) + " is not supported (expected " +
              std::to_string(kCheckpointVersion) + ")");
  ModelConfig cfg;
  cfg.steps = r.u32();
  cfg.channels = r.u32();
  cfg.embedding = r.u32();
  cfg.kernel = r.u32();
  const auto depth = r.u32();
  require(depth > 0 && depth < 64, ErrorKind::Format, "checkpoint has an implausible depth");
  cfg.conv_widths.assign(depth, 0);
  for (auto& width : cfg.conv_widths) width = r.u32();
  cfg.dense_units = r.u32();
  cfg.dropout = r.f32();
  cfg.bn_epsilon = r.f32();
  cfg.bn_momentum = r.f32();
  try {
    cfg.validate();
  } catch (const Error& e) {
    fail(ErrorKind::Format, std::string("checkpoint header: ") + e.what());
  }

  Encoder model(cfg);
  std::vector<float> mean(cfg.channels), stddev(cfg.channels);
  for (auto& m : mean) m = r.f32();
  for (auto& s : stddev) s = r.f32();
  model.set_normalization(mean, stddev);

  auto tensors = model.tensors();
  const auto count = r.u32();
  require(count == tensors.size(), ErrorKind::Format, "checkpoint tensor count does not match its header");
  for (auto* p : tensors) {
    const auto rank = r.u32();
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = r.u32();
    require(shape == p->shape, ErrorKind::Format,
            "checkpoint tensor " + p->name + " has shape " + shape_string(shape) + ", expected " +
                shape_string(p->shape));
    for (std::size_t i = 0; i < p->size(); ++i) p->data()[i] = r.f32();
  }
  require(r.done(), ErrorKind::Format, "checkpoint has trailing bytes");
  return model;
}

void save_checkpoint(const Encoder& model, const std::string& path) {
  bin::write_file(path, checkpoint_bytes(model));
}

Encoder load_checkpoint(const std::string& path) {
  return checkpoint_from_bytes(bin::read_file(path));
}

std::uint64_t model_fingerprint(const Encoder& model) {
  return bin::fingerprint(checkpoint_bytes(model));
}

}  // namespace clsr
