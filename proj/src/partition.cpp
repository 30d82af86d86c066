#include "mlgt/partition.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace mlgt {

LabelGraph build_label_graph(const CooccurrenceMatrix& cooc) {
    LabelGraph g;
    g.d = cooc.dim;
    g.adj.resize(cooc.dim);
    for (const auto& e : cooc.entries) {
        if (e.i == e.j || e.count <= 0) continue;
        g.adj[e.i].push_back(e.j);
        g.adj[e.j].push_back(e.i);
    }
    for (auto& nbrs : g.adj) {
        std::sort(nbrs.begin(), nbrs.end());
        nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
    }
    return g;
}

namespace {

// BFS levels from root; levels[t] sorted ascending.
std::vector<std::vector<int>> bfs_levels(const LabelGraph& g, int root) {
    std::vector<int> level_of(g.d, -1);
    std::vector<int> queue{root};
    level_of[root] = 0;
    std::vector<std::vector<int>> levels{{root}};
    std::size_t head = 0;
    while (head < queue.size()) {
        int u = queue[head++];
        for (int v : g.adj[u]) {
            if (level_of[v] >= 0) continue;
            level_of[v] = level_of[u] + 1;
            if (level_of[v] == static_cast<int>(levels.size())) levels.emplace_back();
            levels[level_of[v]].push_back(v);
            queue.push_back(v);
        }
    }
    for (auto& lv : levels) std::sort(lv.begin(), lv.end());
    return levels;
}

int pseudo_peripheral(const LabelGraph& g) {
    int start = 0;
    int ecc = -1;
    for (int iter = 0; iter < 8; ++iter) {
        auto levels = bfs_levels(g, start);
        int new_ecc = static_cast<int>(levels.size()) - 1;
        if (new_ecc <= ecc) break;
        ecc = new_ecc;
        start = levels.back().front();
    }
    return start;
}

void verify_separator(const LabelGraph& g, const SeparatorSplit& split) {
    std::vector<std::uint8_t> side(g.d, 0);  // 1 = A, 2 = B, 3 = S
    for (int u : split.part_a) side[u] = 1;
    for (int u : split.part_b) side[u] = 2;
    for (int u : split.separator) side[u] = 3;
    std::vector<int> queue = split.part_a;
    std::vector<std::uint8_t> seen(g.d, 0);
    for (int u : queue) seen[u] = 1;
    std::size_t head = 0;
    while (head < queue.size()) {
        int u = queue[head++];
        for (int v : g.adj[u]) {
            if (side[v] == 2) throw std::logic_error("separator does not disconnect the parts");
            if (side[v] == 1 && !seen[v]) {
                seen[v] = 1;
                queue.push_back(v);
            }
        }
    }
}

}  // namespace

SeparatorSplit find_vertex_separator(const LabelGraph& g, double balance) {
    if (g.d < 2) throw std::invalid_argument("find_vertex_separator: need at least 2 nodes");
    if (!(balance > 0.0 && balance <= 0.5)) {
        throw std::invalid_argument("find_vertex_separator: balance must lie in (0, 0.5]");
    }
    auto levels = bfs_levels(g, pseudo_peripheral(g));
    {
        std::size_t reached = 0;
        for (const auto& lv : levels) reached += lv.size();
        if (reached != static_cast<std::size_t>(g.d)) {
            throw std::invalid_argument("find_vertex_separator: graph is not connected");
        }
    }
    int nl = static_cast<int>(levels.size());
    std::vector<std::uint8_t> in_next(g.d, 0);

    for (double bal : {balance, balance / 2.0}) {
        int best_t = -1;
        double best_score = 0.0;
        std::vector<int> best_sep;
        for (int t = 1; t + 1 < nl; ++t) {
            std::fill(in_next.begin(), in_next.end(), 0);
            for (int u : levels[t + 1]) in_next[u] = 1;
            std::vector<int> sep;
            for (int u : levels[t]) {
                for (int v : g.adj[u]) {
                    if (in_next[v]) {
                        sep.push_back(u);
                        break;
                    }
                }
            }
            std::size_t below = 0;
            for (int s = 0; s < t; ++s) below += levels[s].size();
            below += levels[t].size() - sep.size();
            std::size_t above = 0;
            for (int s = t + 1; s < nl; ++s) above += levels[s].size();
            if (below == 0 || above == 0) continue;
            std::size_t limit =
                static_cast<std::size_t>((1.0 - bal) * static_cast<double>(g.d));
            if (std::max(below, above) > limit) continue;
            double score = static_cast<double>(sep.size()) /
                           static_cast<double>(std::min(below, above));
            if (best_t < 0 || score < best_score) {
                best_t = t;
                best_score = score;
                best_sep = std::move(sep);
            }
        }
        if (best_t < 0) continue;
        SeparatorSplit split;
        split.separator = std::move(best_sep);
        std::vector<std::uint8_t> in_sep(g.d, 0);
        for (int u : split.separator) in_sep[u] = 1;
        for (int s = 0; s <= best_t; ++s) {
            for (int u : levels[s]) {
                if (!in_sep[u]) split.part_a.push_back(u);
            }
        }
        for (int s = best_t + 1; s < nl; ++s) {
            for (int u : levels[s]) split.part_b.push_back(u);
        }
        std::sort(split.part_a.begin(), split.part_a.end());
        std::sort(split.part_b.begin(), split.part_b.end());
        verify_separator(g, split);
        return split;
    }
    throw std::runtime_error("find_vertex_separator: no separator within the balance bound");
}

namespace {

LabelGraph induced_subgraph(const LabelGraph& g, const std::vector<int>& labels,
                            std::vector<int>& local_of) {
    LabelGraph sub;
    sub.d = static_cast<int>(labels.size());
    sub.adj.resize(sub.d);
    for (std::size_t i = 0; i < labels.size(); ++i) local_of[labels[i]] = static_cast<int>(i);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        for (int v : g.adj[labels[i]]) {
            int lv = local_of[v];
            if (lv >= 0) sub.adj[i].push_back(lv);
        }
    }
    for (std::size_t i = 0; i < labels.size(); ++i) local_of[labels[i]] = -1;
    return sub;
}

std::vector<std::vector<int>> connected_components(const LabelGraph& g) {
    std::vector<std::vector<int>> comps;
    std::vector<std::uint8_t> seen(g.d, 0);
    for (int s = 0; s < g.d; ++s) {
        if (seen[s]) continue;
        std::vector<int> comp{s};
        seen[s] = 1;
        std::size_t head = 0;
        while (head < comp.size()) {
            int u = comp[head++];
            for (int v : g.adj[u]) {
                if (!seen[v]) {
                    seen[v] = 1;
                    comp.push_back(v);
                }
            }
        }
        std::sort(comp.begin(), comp.end());
        comps.push_back(std::move(comp));
    }
    return comps;
}

struct PartitionBuilder {
    const LabelGraph& g;
    int max_block;
    int max_depth;
    HierPartition out;
    std::vector<int> scratch_local;

    PartitionBuilder(const LabelGraph& graph, int mb, int md)
        : g(graph), max_block(mb), max_depth(md), scratch_local(graph.d, -1) {}

    // Returns (node id, permutation segment for this subtree).
    std::pair<int, std::vector<int>> build(const std::vector<int>& labels,
                                           std::vector<int> path_separators, int depth) {
        int id = static_cast<int>(out.nodes.size());
        out.nodes.emplace_back();

        LabelGraph sub = induced_subgraph(g, labels, scratch_local);
        auto comps = connected_components(sub);
        if (comps.size() > 1) {
            std::vector<int> children;
            std::vector<int> perm;
            for (const auto& comp : comps) {
                std::vector<int> comp_labels;
                comp_labels.reserve(comp.size());
                for (int lu : comp) comp_labels.push_back(labels[lu]);
                auto [child, child_perm] = build(comp_labels, path_separators, depth + 1);
                children.push_back(child);
                perm.insert(perm.end(), child_perm.begin(), child_perm.end());
            }
            out.nodes[id].children = std::move(children);
            return {id, perm};
        }

        bool split_needed = static_cast<int>(labels.size()) > max_block;
        if (split_needed && depth < max_depth && labels.size() >= 2) {
            try {
                SeparatorSplit split = find_vertex_separator(sub, 0.25);
                std::vector<int> sep_global, a_global, b_global;
                for (int lu : split.separator) sep_global.push_back(labels[lu]);
                for (int lu : split.part_a) a_global.push_back(labels[lu]);
                for (int lu : split.part_b) b_global.push_back(labels[lu]);
                std::sort(sep_global.begin(), sep_global.end());
                std::sort(a_global.begin(), a_global.end());
                std::sort(b_global.begin(), b_global.end());

                std::vector<int> child_path = path_separators;
                child_path.insert(child_path.end(), sep_global.begin(), sep_global.end());
                auto [left, left_perm] = build(a_global, child_path, depth + 1);
                auto [right, right_perm] = build(b_global, child_path, depth + 1);
                out.nodes[id].children = {left, right};
                out.nodes[id].separator = sep_global;
                for (int u : sep_global) out.separator_flag[u] = 1;

                std::vector<int> perm = std::move(left_perm);
                perm.insert(perm.end(), right_perm.begin(), right_perm.end());
                perm.insert(perm.end(), sep_global.begin(), sep_global.end());
                return {id, perm};
            } catch (const std::exception&) {
                out.nodes[id].oversized = true;
            }
        } else if (split_needed) {
            out.nodes[id].oversized = true;
        }

        out.nodes[id].labels = labels;
        out.leaves.push_back(labels);
        std::vector<int> block = labels;
        block.insert(block.end(), path_separators.begin(), path_separators.end());
        std::sort(block.begin(), block.end());
        block.erase(std::unique(block.begin(), block.end()), block.end());
        out.blocks.push_back(std::move(block));
        return {id, labels};
    }
};

}  // namespace

HierPartition hierarchical_partition(const LabelGraph& g, int max_block, int max_depth) {
    if (max_block < 2) throw std::invalid_argument("hierarchical_partition: max_block must be >= 2");
    if (g.d < 1) throw std::invalid_argument("hierarchical_partition: empty graph");
    PartitionBuilder builder(g, max_block, max_depth);
    builder.out.d = g.d;
    builder.out.separator_flag.assign(g.d, 0);
    std::vector<int> all(g.d);
    for (int j = 0; j < g.d; ++j) all[j] = j;
    auto [root, perm] = builder.build(all, {}, 0);
    (void)root;
    HierPartition part = std::move(builder.out);
    part.permutation = std::move(perm);
    part.top_separator = part.nodes[0].separator;
    for (const auto& block : part.blocks) {
        part.block_sizes.push_back(static_cast<int>(block.size()));
    }
    if (part.permutation.size() != static_cast<std::size_t>(g.d)) {
        throw std::logic_error("hierarchical_partition: permutation is not a bijection");
    }
    return part;
}

DecodeResult combine_predictions(const std::vector<BlockPrediction>& blocks, int d, int k) {
    if (blocks.empty()) throw std::invalid_argument("combine_predictions: no blocks");
    if (k < 1) throw std::invalid_argument("combine_predictions: k must be positive");
    std::vector<int> q(d, 0);
    for (const auto& block : blocks) {
        if (block.result.scores.size() != block.labels.size()) {
            throw std::invalid_argument("combine_predictions: block score length mismatch");
        }
        for (int g : block.labels) {
            if (g < 0 || g >= d) {
                throw std::invalid_argument("combine_predictions: blocks disagree on label count");
            }
            ++q[g];
        }
    }

    DecodeResult res;
    res.method = DecodeMethod::TOPK;
    res.scores.assign(d, 0.0);
    bool any_margins = false;
    for (const auto& block : blocks) any_margins |= !block.result.margin_sums.empty();
    if (any_margins) res.margin_sums.assign(d, 0.0);
    std::vector<std::uint8_t> listed(d, 0);
    for (const auto& block : blocks) {
        double max_score = 0.0;
        for (double s : block.result.scores) max_score = std::max(max_score, s);
        for (std::size_t local = 0; local < block.labels.size(); ++local) {
            int g = block.labels[local];
            listed[g] = 1;
            if (max_score > 0.0) {
                res.scores[g] += block.result.scores[local] / max_score / q[g];
            }
            if (any_margins && !block.result.margin_sums.empty()) {
                res.margin_sums[g] += block.result.margin_sums[local] / q[g];
            }
        }
    }

    std::vector<int> cand;
    for (int j = 0; j < d; ++j) {
        if (listed[j]) cand.push_back(j);
    }
    auto better = [&](int x, int y) {
        if (res.scores[x] != res.scores[y]) return res.scores[x] > res.scores[y];
        bool sep_x = q[x] > 1, sep_y = q[y] > 1;
        if (sep_x != sep_y) return sep_x;
        if (!res.margin_sums.empty() && res.margin_sums[x] != res.margin_sums[y]) {
            return res.margin_sums[x] > res.margin_sums[y];
        }
        return x < y;
    };
    int keep = std::min<int>(k, static_cast<int>(cand.size()));
    std::partial_sort(cand.begin(), cand.begin() + keep, cand.end(), better);
    cand.resize(keep);
    std::sort(cand.begin(), cand.end());
    res.support = std::move(cand);
    return res;
}

void save_partition(const PartitionFile& part, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    for (std::size_t b = 0; b < part.blocks.size(); ++b) {
        out << b << ":";
        for (int j : part.blocks[b]) out << " " << j;
        out << "\n";
    }
    out << "S:";
    for (int j : part.top_separator) out << " " << j;
    out << "\n";
    if (!out) throw std::runtime_error("write failed: " + path);
}

void save_partition(const HierPartition& part, const std::string& path) {
    PartitionFile file;
    file.blocks = part.blocks;
    file.top_separator = part.top_separator;
    save_partition(file, path);
}

PartitionFile load_partition(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    PartitionFile part;
    std::string line;
    std::size_t lineno = 0;
    bool saw_sep = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::size_t colon = line.find(':');
        if (colon == std::string::npos) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": missing ':'");
        }
        std::string head = line.substr(0, colon);
        std::istringstream body(line.substr(colon + 1));
        std::vector<int> labels;
        int v;
        while (body >> v) labels.push_back(v);
        if (head == "S") {
            part.top_separator = std::move(labels);
            saw_sep = true;
        } else {
            std::size_t id = 0;
            auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), id);
            if (ec != std::errc() || ptr != head.data() + head.size() || id != part.blocks.size()) {
                throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad block id");
            }
            part.blocks.push_back(std::move(labels));
        }
    }
    if (!saw_sep) throw std::runtime_error(path + ": missing S: line");
    if (part.blocks.empty()) throw std::runtime_error(path + ": no blocks");
    return part;
}

void save_permutation(const std::vector<int>& perm, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    for (int j : perm) out << j << "\n";
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<int> load_permutation(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<int> perm;
    int v;
    while (in >> v) perm.push_back(v);
    return perm;
}

void write_spy_csv(const CooccurrenceMatrix& cooc, const std::vector<int>& perm,
                   const std::string& path) {
    if (static_cast<int>(perm.size()) != cooc.dim) {
        throw std::invalid_argument("write_spy_csv: permutation length mismatch");
    }
    std::vector<int> pos(cooc.dim, -1);
    for (std::size_t t = 0; t < perm.size(); ++t) pos[perm[t]] = static_cast<int>(t);
    std::vector<std::pair<int, int>> coords;
    for (const auto& e : cooc.entries) {
        coords.emplace_back(pos[e.i], pos[e.j]);
        if (e.i != e.j) coords.emplace_back(pos[e.j], pos[e.i]);
    }
    std::sort(coords.begin(), coords.end());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "row,col\n";
    for (auto [r, c] : coords) out << r << "," << c << "\n";
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace mlgt
