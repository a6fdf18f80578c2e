#include "accord/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

namespace accord {

namespace {

constexpr const char* kFormat = "accord-checkpoint";

}  // namespace

nlohmann::json checkpoint_to_json(const nn::NetParams<double>& p) {
    nlohmann::json tensors = nlohmann::json::array();
    p.for_each([&](std::string_view name, const auto& t) {
        std::vector<double> data(t.data(), t.data() + t.size());  // column-major
        tensors.push_back({{"name", name}, {"rows", t.rows()}, {"cols", t.cols()}, {"data", std::move(data)}});
    });
    const auto& d = p.dims;
    return {{"format", kFormat},
            {"version", kCheckpointVersion},
            {"dims",
             {{"encoder_hidden", d.encoder_hidden},
              {"encoder_out", d.encoder_out},
              {"head_hidden", d.head_hidden},
              {"critic_hidden1", d.critic_hidden1},
              {"critic_hidden2", d.critic_hidden2}}},
            {"tensors", std::move(tensors)}};
}

nn::NetParams<double> checkpoint_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != kFormat) throw std::runtime_error("not an accord checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion) {
        throw std::runtime_error("unsupported checkpoint version " + j.at("version").dump());
    }
    nn::NetDims d;
    const auto& jd = j.at("dims");
    d.encoder_hidden = jd.at("encoder_hidden").get<int>();
    d.encoder_out = jd.at("encoder_out").get<int>();
    d.head_hidden = jd.at("head_hidden").get<int>();
    d.critic_hidden1 = jd.at("critic_hidden1").get<int>();
    d.critic_hidden2 = jd.at("critic_hidden2").get<int>();

    auto p = nn::NetParams<double>::zeros(d);
    const auto& tensors = j.at("tensors");
    std::size_t idx = 0;
    p.for_each([&](std::string_view name, auto& t) {
        if (idx >= tensors.size()) throw std::runtime_error("checkpoint is missing tensors");
        const auto& jt = tensors[idx++];
        if (jt.at("name").get<std::string>() != name) {
            throw std::runtime_error("checkpoint tensor order mismatch at " + std::string(name));
        }
        if (jt.at("rows").get<Eigen::Index>() != t.rows() || jt.at("cols").get<Eigen::Index>() != t.cols()) {
            throw std::runtime_error("checkpoint shape mismatch for " + std::string(name));
        }
        const auto& data = jt.at("data");
        if (static_cast<Eigen::Index>(data.size()) != t.size()) {
            throw std::runtime_error("checkpoint size mismatch for " + std::string(name));
        }
        for (Eigen::Index k = 0; k < t.size(); ++k) t.data()[k] = data[static_cast<std::size_t>(k)].template get<double>();
    });
    if (idx != tensors.size()) throw std::runtime_error("checkpoint has unexpected extra tensors");
    return p;
}

void save_checkpoint(const std::filesystem::path& path, const nn::NetParams<double>& params) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
    out << checkpoint_to_json(params).dump() << '\n';
}

nn::NetParams<double> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
    return checkpoint_from_json(nlohmann::json::parse(in));
}

}  // namespace accord
