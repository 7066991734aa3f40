#include "mme/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace mme {

std::vector<Mesh> Dataset::subset(std::span<const std::size_t> indices) const {
    std::vector<Mesh> out;
    out.reserve(indices.size());
    for (auto i : indices) out.push_back(meshes.at(i));
    return out;
}

void Dataset::validate() const {
    if (num_classes == 0) throw std::invalid_argument("dataset: num_classes must be positive");
    for (const auto& m : meshes) {
        m.validate();
        if (task == Task::segmentation) {
            if (!m.edge_labels) throw std::invalid_argument(m.id() + ": segmentation mesh without edge labels");
            for (int l : *m.edge_labels)
                if (l < 0 || static_cast<std::size_t>(l) >= num_classes)
                    throw std::invalid_argument(m.id() + ": edge label out of range");
        } else if (m.class_label && (*m.class_label < 0 || static_cast<std::size_t>(*m.class_label) >= num_classes)) {
            throw std::invalid_argument(m.id() + ": class label out of range");
        }
    }
    std::set<std::size_t> seen;
    for (auto i : train) seen.insert(i);
    for (auto i : test)
        if (!seen.insert(i).second) throw std::invalid_argument("dataset: train and test splits overlap");
    if (seen.size() != meshes.size() || (!seen.empty() && *seen.rbegin() >= meshes.size()))
        throw std::invalid_argument("dataset: splits do not cover the meshes exactly");
}

void save_dataset(const Dataset& data, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<const char*> split(data.meshes.size(), "train");
    for (auto i : data.test) split[i] = "test";
    std::ofstream manifest(dir / "manifest.csv");
    manifest << "mesh_id,file,class,split\n";
    for (std::size_t i = 0; i < data.meshes.size(); ++i) {
        const Mesh& m = data.meshes[i];
        const std::string file = m.id() + ".off";
        save_off(m, dir / file);
        if (m.edge_labels) save_labels(*m.edge_labels, dir / (m.id() + ".eseg"));
        if (m.face_labels) save_labels(*m.face_labels, dir / (m.id() + ".fseg"));
        manifest << m.id() << ',' << file << ',' << (m.class_label ? *m.class_label : -1) << ',' << split[i] << '\n';
    }
    std::ofstream info(dir / "dataset.info");
    info << "task=" << task_name(data.task) << "\nnum_classes=" << data.num_classes << '\n';
}

Dataset load_dataset(const std::filesystem::path& dir) {
    Dataset data;
    std::ifstream info(dir / "dataset.info");
    if (!info) throw std::runtime_error("missing " + (dir / "dataset.info").string());
    for (std::string line; std::getline(info, line);) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
        if (key == "task") data.task = parse_task(value);
        if (key == "num_classes") data.num_classes = std::stoul(value);
    }
    std::ifstream manifest(dir / "manifest.csv");
    if (!manifest) throw std::runtime_error("missing " + (dir / "manifest.csv").string());
    std::string line;
    std::getline(manifest, line);
    while (std::getline(manifest, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string id, file, cls, split;
        std::getline(ss, id, ',');
        std::getline(ss, file, ',');
        std::getline(ss, cls, ',');
        std::getline(ss, split, ',');
        Mesh m = load_mesh(dir / file);
        if (const int c = std::stoi(cls); c >= 0) m.class_label = c;
        (split == "test" ? data.test : data.train).push_back(data.meshes.size());
        data.meshes.push_back(std::move(m));
    }
    data.validate();
    return data;
}

} // namespace mme
