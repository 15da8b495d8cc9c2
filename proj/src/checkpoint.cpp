#include "pft/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace pft {

namespace {

constexpr char kMagic[8] = {'P', 'F', 'T', 'C', 'K', 'P', 'T', '1'};

void write_u32(std::ostream& out, std::uint32_t v) {
    char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 4);
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return v;
}

void write_doubles(std::ostream& out, const std::vector<double>& values) {
    for (double d : values) {
        auto bits = std::bit_cast<std::uint64_t>(d);
        char buf[8];
        for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
        out.write(buf, 8);
    }
}

void read_doubles(std::istream& in, std::vector<double>& values, const std::string& what) {
    for (double& d : values) {
        unsigned char buf[8];
        in.read(reinterpret_cast<char*>(buf), 8);
        if (!in) throw std::runtime_error("checkpoint truncated while reading " + what);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
        d = std::bit_cast<double>(bits);
    }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelState& model,
                     const CheckpointMeta& meta) {
    nlohmann::ordered_json header;
    header["format"] = 1;
    header["input_dim"] = model.input_dim();
    header["hidden_dim"] = model.hidden_dim();
    header["seed"] = meta.seed;
    header["config_hash"] = meta.config_hash;
    auto tasks = nlohmann::ordered_json::array();
    for (const auto& [task_id, head] : model.heads) {
        tasks.push_back({{"id", task_id}, {"n_labels", head.n_labels()}});
    }
    header["tasks"] = tasks;
    const std::string header_text = header.dump();

    if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
    out.write(kMagic, sizeof(kMagic));
    write_u32(out, static_cast<std::uint32_t>(header_text.size()));
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
    write_doubles(out, model.encoder.w1.data);
    write_doubles(out, model.encoder.b1);
    for (const auto& [task_id, head] : model.heads) {
        write_doubles(out, head.w.data);
        write_doubles(out, head.b);
    }
    if (!out) throw std::runtime_error("write failure on checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());

    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error("not a checkpoint file: " + path.string());
    }
    const std::uint32_t header_len = read_u32(in);
    std::string header_text(header_len, '\0');
    in.read(header_text.data(), header_len);
    if (!in) throw std::runtime_error("checkpoint header truncated: " + path.string());

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_text);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("malformed checkpoint header: " + std::string(e.what()));
    }

    const auto input_dim = header.at("input_dim").get<std::size_t>();
    const auto hidden_dim = header.at("hidden_dim").get<std::size_t>();

    Checkpoint ckpt;
    ckpt.meta.seed = header.at("seed").get<std::uint64_t>();
    ckpt.meta.config_hash = header.at("config_hash").get<std::string>();
    ckpt.model.encoder.w1 = Matrix(hidden_dim, input_dim);
    ckpt.model.encoder.b1 = Vector(hidden_dim, 0.0);
    read_doubles(in, ckpt.model.encoder.w1.data, "encoder.w1");
    read_doubles(in, ckpt.model.encoder.b1, "encoder.b1");
    for (const auto& task : header.at("tasks")) {
        HeadParams head;
        head.task_id = task.at("id").get<std::string>();
        const auto n_labels = task.at("n_labels").get<std::size_t>();
        head.w = Matrix(n_labels, hidden_dim);
        head.b = Vector(n_labels, 0.0);
        read_doubles(in, head.w.data, "head[" + head.task_id + "].w");
        read_doubles(in, head.b, "head[" + head.task_id + "].b");
        ckpt.model.heads.emplace(head.task_id, std::move(head));
    }
    return ckpt;
}

}  // namespace pft
