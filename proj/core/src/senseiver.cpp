#include "wavesense/senseiver.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "wavesense/error.hpp"
#include "wavesense/io.hpp"
#include "wavesense/rng.hpp"

namespace wavesense {

using json = nlohmann::json;
using RowVec = Eigen::RowVectorXd;

void ModelConfig::validate() const {
    if (num_freq_bands < 1 || latent_rows < 1 || latent_dim < 1 || num_encoder_blocks < 1 ||
        num_heads < 1 || mlp_hidden < 1)
        throw Error("bad-config", "all model counts must be >= 1");
    if (max_freq < 1.0) throw Error("bad-config", "max_freq must be >= 1");
    if (latent_dim % num_heads != 0)
        throw Error("bad-config", "latent_dim must be divisible by num_heads");
}

Matrix& ModelParams::block(const std::string& name) {
    for (auto& b : blocks)
        if (b.name == name) return b.value;
    throw Error("unknown-block", name);
}

const Matrix& ModelParams::block(const std::string& name) const {
    for (const auto& b : blocks)
        if (b.name == name) return b.value;
    throw Error("unknown-block", name);
}

std::size_t ModelParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& b : blocks) n += static_cast<std::size_t>(b.value.size());
    return n;
}

namespace {

constexpr double kLnEps = 1e-5;

void add_attn_blocks(std::vector<ParamBlock>& blocks, Rng& rng, const std::string& prefix,
                     int q_in, int kv_in, int dim) {
    auto uniform = [&rng](int r, int c, int fan_in) {
        Matrix m(r, c);
        const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) m(i, j) = rng.uniform(-s, s);
        return m;
    };
    blocks.push_back({prefix + ".wq", uniform(q_in, dim, q_in)});
    blocks.push_back({prefix + ".bq", Matrix::Zero(1, dim)});
    blocks.push_back({prefix + ".wk", uniform(kv_in, dim, kv_in)});
    blocks.push_back({prefix + ".bk", Matrix::Zero(1, dim)});
    blocks.push_back({prefix + ".wv", uniform(kv_in, dim, kv_in)});
    blocks.push_back({prefix + ".bv", Matrix::Zero(1, dim)});
    blocks.push_back({prefix + ".wo", uniform(dim, dim, dim)});
    blocks.push_back({prefix + ".bo", Matrix::Zero(1, dim)});
}

void add_layernorm(std::vector<ParamBlock>& blocks, const std::string& prefix, int dim) {
    blocks.push_back({prefix + ".gamma", Matrix::Ones(1, dim)});
    blocks.push_back({prefix + ".beta", Matrix::Zero(1, dim)});
}

}  // namespace

ModelParams init_params(const ModelConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    const int d = cfg.latent_dim, e = cfg.enc_dim(), t = cfg.token_dim(), m = cfg.mlp_hidden;

    ModelParams p;
    p.cfg = cfg;

    auto uniform = [&rng](int r, int c, int fan_in) {
        Matrix out(r, c);
        const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) out(i, j) = rng.uniform(-s, s);
        return out;
    };

    p.blocks.push_back({"latent_init", uniform(cfg.latent_rows, d, d)});
    add_layernorm(p.blocks, "enc_cross.ln_q", d);
    add_layernorm(p.blocks, "enc_cross.ln_kv", t);
    add_attn_blocks(p.blocks, rng, "enc_cross", d, t, d);

    for (int b = 0; b < cfg.num_encoder_blocks; ++b) {
        const std::string pre = "blk" + std::to_string(b);
        add_layernorm(p.blocks, pre + ".attn.ln", d);
        add_attn_blocks(p.blocks, rng, pre + ".attn", d, d, d);
        add_layernorm(p.blocks, pre + ".mlp.ln", d);
        p.blocks.push_back({pre + ".mlp.w1", uniform(d, m, d)});
        p.blocks.push_back({pre + ".mlp.b1", Matrix::Zero(1, m)});
        p.blocks.push_back({pre + ".mlp.w2", uniform(m, d, m)});
        p.blocks.push_back({pre + ".mlp.b2", Matrix::Zero(1, d)});
    }

    add_layernorm(p.blocks, "dec.ln_kv", d);
    add_attn_blocks(p.blocks, rng, "dec", e, d, d);
    add_layernorm(p.blocks, "dec.head.ln", d);
    p.blocks.push_back({"dec.head.w1", uniform(d, m, d)});
    p.blocks.push_back({"dec.head.b1", Matrix::Zero(1, m)});
    p.blocks.push_back({"dec.head.w2", uniform(m, 1, m)});
    p.blocks.push_back({"dec.head.b2", Matrix::Zero(1, 1)});
    return p;
}

ModelParams zeros_like(const ModelParams& like) {
    ModelParams g;
    g.cfg = like.cfg;
    g.scale = like.scale;
    g.blocks.reserve(like.blocks.size());
    for (const auto& b : like.blocks)
        g.blocks.push_back({b.name, Matrix::Zero(b.value.rows(), b.value.cols())});
    return g;
}

// --- position encoding ------------------------------------------------------

Matrix encode_positions(const std::vector<GeoPoint>& points, const BathymetryGrid& bathy,
                        const ModelConfig& cfg) {
    cfg.validate();
    const GridSpec& spec = bathy.spec;
    double max_depth = kMinDepthClampM;
    for (int j = 0; j < spec.nlat; ++j)
        for (int i = 0; i < spec.nlon; ++i)
            if (!bathy.is_land(j, i)) max_depth = std::max(max_depth, bathy.depth(j, i));

    const int nb = cfg.num_freq_bands;
    std::vector<double> freqs(nb);
    for (int k = 0; k < nb; ++k)
        freqs[k] = nb == 1 ? 1.0 : std::pow(cfg.max_freq, static_cast<double>(k) / (nb - 1));

    Matrix out(static_cast<Eigen::Index>(points.size()), cfg.enc_dim());
    for (std::size_t r = 0; r < points.size(); ++r) {
        const GeoPoint& p = points[r];
        if (!spec.contains(p)) throw Error("off-grid", "encode_positions point outside grid");
        const double coords[3] = {
            2.0 * (p.lon - spec.lon_min) / (spec.lon_max - spec.lon_min) - 1.0,
            2.0 * (p.lat - spec.lat_min) / (spec.lat_max - spec.lat_min) - 1.0,
            std::clamp(bathy.z_b(
                           // nearest cell, clamped
                           std::clamp(static_cast<int>(std::floor((p.lat - spec.lat_min) / spec.dlat())),
                                      0, spec.nlat - 1),
                           std::clamp(static_cast<int>(std::floor((p.lon - spec.lon_min) / spec.dlon())),
                                      0, spec.nlon - 1)) /
                           max_depth,
                       -1.0, 1.0)};
        int col = 0;
        for (double c : coords) {
            out(r, col++) = c;
            for (int k = 0; k < nb; ++k) {
                out(r, col++) = std::sin(M_PI * freqs[k] * c);
                out(r, col++) = std::cos(M_PI * freqs[k] * c);
            }
        }
    }
    return out;
}

// --- layer primitives -------------------------------------------------------

namespace {

struct LNCache {
    Matrix xhat;
    Eigen::VectorXd inv_std;
};

Matrix ln_forward(const Matrix& x, const Matrix& gamma, const Matrix& beta, LNCache& c) {
    const Eigen::Index n = x.rows(), d = x.cols();
    c.xhat.resize(n, d);
    c.inv_std.resize(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const double mu = x.row(r).mean();
        const double var = (x.row(r).array() - mu).square().mean();
        const double inv = 1.0 / std::sqrt(var + kLnEps);
        c.inv_std(r) = inv;
        c.xhat.row(r) = (x.row(r).array() - mu) * inv;
    }
    Matrix y = c.xhat;
    y.array().rowwise() *= gamma.row(0).array();
    y.rowwise() += beta.row(0);
    return y;
}

Matrix ln_backward(const Matrix& dy, const Matrix& gamma, const LNCache& c, Matrix& dgamma,
                   Matrix& dbeta) {
    dgamma.row(0) += (dy.array() * c.xhat.array()).colwise().sum().matrix();
    dbeta.row(0) += dy.colwise().sum();
    Matrix dxhat = dy;
    dxhat.array().rowwise() *= gamma.row(0).array();
    Matrix dx(dy.rows(), dy.cols());
    for (Eigen::Index r = 0; r < dy.rows(); ++r) {
        const double m1 = dxhat.row(r).mean();
        const double m2 = (dxhat.row(r).array() * c.xhat.row(r).array()).mean();
        dx.row(r) = c.inv_std(r) * (dxhat.row(r).array() - m1 - c.xhat.row(r).array() * m2);
    }
    return dx;
}

Matrix linear_forward(const Matrix& x, const Matrix& w, const Matrix& b) {
    Matrix y = x * w;
    y.rowwise() += b.row(0);
    return y;
}

// dy -> dx; accumulates dw/db.
Matrix linear_backward(const Matrix& x, const Matrix& w, const Matrix& dy, Matrix& dw,
                       Matrix& db) {
    dw += x.transpose() * dy;
    db.row(0) += dy.colwise().sum();
    return dy * w.transpose();
}

void softmax_rows(Matrix& s) {
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
        const double mx = s.row(r).maxCoeff();
        s.row(r) = (s.row(r).array() - mx).exp();
        s.row(r) /= s.row(r).sum();
    }
}

struct MHACache {
    Matrix xq, xkv, q, k, v, concat;
    std::vector<Matrix> attn;  // per head
};

struct AttnNames {
    std::string wq, bq, wk, bk, wv, bv, wo, bo;
    explicit AttnNames(const std::string& p)
        : wq(p + ".wq"), bq(p + ".bq"), wk(p + ".wk"), bk(p + ".bk"),
          wv(p + ".wv"), bv(p + ".bv"), wo(p + ".wo"), bo(p + ".bo") {}
};

Matrix mha_forward(const Matrix& xq, const Matrix& xkv, const ModelParams& p,
                   const std::string& prefix, MHACache& c) {
    const AttnNames n(prefix);
    const int heads = p.cfg.num_heads;
    const int dh = p.cfg.latent_dim / heads;
    const double sc = 1.0 / std::sqrt(static_cast<double>(dh));

    c.xq = xq;
    c.xkv = xkv;
    c.q = linear_forward(xq, p.block(n.wq), p.block(n.bq));
    c.k = linear_forward(xkv, p.block(n.wk), p.block(n.bk));
    c.v = linear_forward(xkv, p.block(n.wv), p.block(n.bv));
    c.attn.clear();
    c.concat.resize(xq.rows(), p.cfg.latent_dim);
    for (int h = 0; h < heads; ++h) {
        Matrix s = c.q.middleCols(h * dh, dh) * c.k.middleCols(h * dh, dh).transpose() * sc;
        softmax_rows(s);
        c.concat.middleCols(h * dh, dh) = s * c.v.middleCols(h * dh, dh);
        c.attn.push_back(std::move(s));
    }
    return linear_forward(c.concat, p.block(n.wo), p.block(n.bo));
}

// Returns {dxq, dxkv}.
std::pair<Matrix, Matrix> mha_backward(const Matrix& dy, const ModelParams& p,
                                       const std::string& prefix, const MHACache& c,
                                       ModelParams& g) {
    const AttnNames n(prefix);
    const int heads = p.cfg.num_heads;
    const int dh = p.cfg.latent_dim / heads;
    const double sc = 1.0 / std::sqrt(static_cast<double>(dh));

    const Matrix dconcat = linear_backward(c.concat, p.block(n.wo), dy, g.block(n.wo), g.block(n.bo));

    Matrix dq = Matrix::Zero(c.q.rows(), c.q.cols());
    Matrix dk = Matrix::Zero(c.k.rows(), c.k.cols());
    Matrix dv = Matrix::Zero(c.v.rows(), c.v.cols());
    for (int h = 0; h < heads; ++h) {
        const auto a = c.attn[static_cast<std::size_t>(h)];
        const Matrix doh = dconcat.middleCols(h * dh, dh);
        const Matrix da = doh * c.v.middleCols(h * dh, dh).transpose();
        dv.middleCols(h * dh, dh) = a.transpose() * doh;
        // softmax backward per row
        Matrix ds = da;
        for (Eigen::Index r = 0; r < ds.rows(); ++r) {
            const double dot = (da.row(r).array() * a.row(r).array()).sum();
            ds.row(r) = a.row(r).array() * (da.row(r).array() - dot);
        }
        dq.middleCols(h * dh, dh) = ds * c.k.middleCols(h * dh, dh) * sc;
        dk.middleCols(h * dh, dh) = ds.transpose() * c.q.middleCols(h * dh, dh) * sc;
    }

    Matrix dxq = linear_backward(c.xq, p.block(n.wq), dq, g.block(n.wq), g.block(n.bq));
    Matrix dxkv = linear_backward(c.xkv, p.block(n.wk), dk, g.block(n.wk), g.block(n.bk));
    dxkv += linear_backward(c.xkv, p.block(n.wv), dv, g.block(n.wv), g.block(n.bv));
    return {std::move(dxq), std::move(dxkv)};
}

double gelu(double z) { return 0.5 * z * (1.0 + std::erf(z * M_SQRT1_2)); }

double gelu_grad(double z) {
    const double phi = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
    return 0.5 * (1.0 + std::erf(z * M_SQRT1_2)) + z * phi;
}

struct MLPCache {
    Matrix x, z, a;
};

Matrix mlp_forward(const Matrix& x, const ModelParams& p, const std::string& prefix,
                   MLPCache& c) {
    c.x = x;
    c.z = linear_forward(x, p.block(prefix + ".w1"), p.block(prefix + ".b1"));
    c.a = c.z.unaryExpr([](double v) { return gelu(v); });
    return linear_forward(c.a, p.block(prefix + ".w2"), p.block(prefix + ".b2"));
}

Matrix mlp_backward(const Matrix& dy, const ModelParams& p, const std::string& prefix,
                    const MLPCache& c, ModelParams& g) {
    Matrix da = linear_backward(c.a, p.block(prefix + ".w2"), dy, g.block(prefix + ".w2"),
                                g.block(prefix + ".b2"));
    Matrix dz = da.array() * c.z.unaryExpr([](double v) { return gelu_grad(v); }).array();
    return linear_backward(c.x, p.block(prefix + ".w1"), dz, g.block(prefix + ".w1"),
                           g.block(prefix + ".b1"));
}

// --- whole-network forward/backward ----------------------------------------

struct EncCache {
    Matrix tokens;
    LNCache ln_q, ln_kv;
    MHACache cross;
    struct Block {
        LNCache ln_a;
        MHACache attn;
        LNCache ln_m;
        MLPCache mlp;
        Matrix z_in_attn, z_in_mlp;
    };
    std::vector<Block> blocks;
};

Matrix encoder_forward(const ModelParams& p, const Matrix& tokens, EncCache& c) {
    c.tokens = tokens;
    const Matrix& z0 = p.block("latent_init");
    const Matrix zq = ln_forward(z0, p.block("enc_cross.ln_q.gamma"),
                                 p.block("enc_cross.ln_q.beta"), c.ln_q);
    const Matrix xn = ln_forward(tokens, p.block("enc_cross.ln_kv.gamma"),
                                 p.block("enc_cross.ln_kv.beta"), c.ln_kv);
    Matrix z = z0 + mha_forward(zq, xn, p, "enc_cross", c.cross);

    c.blocks.resize(static_cast<std::size_t>(p.cfg.num_encoder_blocks));
    for (int b = 0; b < p.cfg.num_encoder_blocks; ++b) {
        auto& cb = c.blocks[static_cast<std::size_t>(b)];
        const std::string pre = "blk" + std::to_string(b);
        cb.z_in_attn = z;
        const Matrix an =
            ln_forward(z, p.block(pre + ".attn.ln.gamma"), p.block(pre + ".attn.ln.beta"), cb.ln_a);
        z += mha_forward(an, an, p, pre + ".attn", cb.attn);
        cb.z_in_mlp = z;
        const Matrix mn =
            ln_forward(z, p.block(pre + ".mlp.ln.gamma"), p.block(pre + ".mlp.ln.beta"), cb.ln_m);
        z += mlp_forward(mn, p, pre + ".mlp", cb.mlp);
    }
    return z;
}

void encoder_backward(const Matrix& dz_final, const ModelParams& p, const EncCache& c,
                      ModelParams& g) {
    Matrix dz = dz_final;
    for (int b = p.cfg.num_encoder_blocks - 1; b >= 0; --b) {
        const auto& cb = c.blocks[static_cast<std::size_t>(b)];
        const std::string pre = "blk" + std::to_string(b);
        // mlp residual
        Matrix dmn = mlp_backward(dz, p, pre + ".mlp", cb.mlp, g);
        dz += ln_backward(dmn, p.block(pre + ".mlp.ln.gamma"), cb.ln_m,
                          g.block(pre + ".mlp.ln.gamma"), g.block(pre + ".mlp.ln.beta"));
        // self-attention residual; query and key/value inputs coincide
        auto [dxq, dxkv] = mha_backward(dz, p, pre + ".attn", cb.attn, g);
        Matrix dan = dxq + dxkv;
        dz += ln_backward(dan, p.block(pre + ".attn.ln.gamma"), cb.ln_a,
                          g.block(pre + ".attn.ln.gamma"), g.block(pre + ".attn.ln.beta"));
    }
    // cross-attention residual onto the learned latent array
    auto [dzq, dxn] = mha_backward(dz, p, "enc_cross", c.cross, g);
    g.block("latent_init") += dz;
    g.block("latent_init") += ln_backward(dzq, p.block("enc_cross.ln_q.gamma"), c.ln_q,
                                          g.block("enc_cross.ln_q.gamma"),
                                          g.block("enc_cross.ln_q.beta"));
    // token gradient is discarded; positions and readings are inputs
    ln_backward(dxn, p.block("enc_cross.ln_kv.gamma"), c.ln_kv,
                g.block("enc_cross.ln_kv.gamma"), g.block("enc_cross.ln_kv.beta"));
}

struct DecCache {
    LNCache ln_kv;
    MHACache cross;
    LNCache ln_head;
    MLPCache head;
    Matrix attn_out;
};

Eigen::VectorXd decoder_forward(const ModelParams& p, const Matrix& z, const Matrix& a_q,
                                DecCache& c) {
    const Matrix zn =
        ln_forward(z, p.block("dec.ln_kv.gamma"), p.block("dec.ln_kv.beta"), c.ln_kv);
    c.attn_out = mha_forward(a_q, zn, p, "dec", c.cross);
    const Matrix hn = ln_forward(c.attn_out, p.block("dec.head.ln.gamma"),
                                 p.block("dec.head.ln.beta"), c.ln_head);
    return mlp_forward(hn, p, "dec.head", c.head).col(0);
}

// Returns dZ.
Matrix decoder_backward(const Eigen::VectorXd& dpred, const ModelParams& p, const DecCache& c,
                        ModelParams& g) {
    Matrix dout(dpred.size(), 1);
    dout.col(0) = dpred;
    Matrix dhn = mlp_backward(dout, p, "dec.head", c.head, g);
    Matrix dattn = ln_backward(dhn, p.block("dec.head.ln.gamma"), c.ln_head,
                               g.block("dec.head.ln.gamma"), g.block("dec.head.ln.beta"));
    auto [da_q, dzn] = mha_backward(dattn, p, "dec", c.cross, g);
    (void)da_q;  // query encodings are inputs
    return ln_backward(dzn, p.block("dec.ln_kv.gamma"), c.ln_kv, g.block("dec.ln_kv.gamma"),
                       g.block("dec.ln_kv.beta"));
}

Matrix build_tokens(const SensorReadings& readings, const Matrix& a_s, double scale) {
    const auto n = static_cast<Eigen::Index>(readings.values.size());
    if (n == 0) throw Error("no-observations", "encode requires at least one sensor reading");
    if (a_s.rows() != n)
        throw Error("shape-mismatch", "sensor readings and encodings are misaligned");
    Matrix tokens(n, a_s.cols() + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double v = readings.values[static_cast<std::size_t>(i)];
        if (!std::isfinite(v)) throw Error("bad-reading", "non-finite sensor value");
        tokens(i, 0) = v / scale;
    }
    tokens.rightCols(a_s.cols()) = a_s;
    return tokens;
}

}  // namespace

Matrix encode(const SensorReadings& readings, const Matrix& a_s, const ModelParams& params) {
    EncCache cache;
    return encoder_forward(params, build_tokens(readings, a_s, params.scale), cache);
}

Eigen::VectorXd decode(const Matrix& z, const Matrix& a_q, const ModelParams& params) {
    if (a_q.rows() < 1) throw Error("no-queries", "decode requires at least one query");
    DecCache cache;
    return decoder_forward(params, z, a_q, cache) * params.scale;
}

double loss(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth) {
    if (pred.size() == 0) throw Error("empty-loss", "loss over empty prediction set");
    if (pred.size() != truth.size())
        throw Error("shape-mismatch", "prediction/truth length mismatch");
    return (pred - truth).squaredNorm() / static_cast<double>(pred.size());
}

double gradients(const ModelParams& params, const std::vector<TrainingSample>& batch,
                 const BathymetryGrid& bathy, ModelParams& grads) {
    if (batch.empty()) throw Error("empty-batch", "gradient batch is empty");
    grads = zeros_like(params);

    double total_loss = 0.0;
    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    for (const auto& sample : batch) {
        const Matrix a_s = encode_positions(sample.readings.locations, bathy, params.cfg);
        const Matrix a_q = encode_positions(sample.queries, bathy, params.cfg);
        if (sample.truths.size() != a_q.rows())
            throw Error("shape-mismatch", "query/truth length mismatch");

        EncCache enc_cache;
        DecCache dec_cache;
        const Matrix tokens = build_tokens(sample.readings, a_s, params.scale);
        const Matrix z = encoder_forward(params, tokens, enc_cache);
        const Eigen::VectorXd pred = decoder_forward(params, z, a_q, dec_cache);
        const Eigen::VectorXd truth_scaled = sample.truths / params.scale;

        const auto m = static_cast<double>(pred.size());
        const Eigen::VectorXd diff = pred - truth_scaled;
        total_loss += diff.squaredNorm() / m * inv_batch;

        const Eigen::VectorXd dpred = 2.0 * diff * (inv_batch / m);
        const Matrix dz = decoder_backward(dpred, params, dec_cache, grads);
        encoder_backward(dz, params, enc_cache, grads);
    }

    for (const auto& b : grads.blocks)
        if (!b.value.allFinite())
            throw Error("non-finite-gradient", "block " + b.name);
    return total_loss;
}

AdamState init_adam(const ModelParams& params, double lr) {
    AdamState s;
    s.lr = lr;
    for (const auto& b : params.blocks) {
        s.m.push_back(Matrix::Zero(b.value.rows(), b.value.cols()));
        s.v.push_back(Matrix::Zero(b.value.rows(), b.value.cols()));
    }
    return s;
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& opt) {
    if (opt.m.size() != params.blocks.size())
        throw Error("shape-mismatch", "optimizer state does not match parameters");
    ++opt.step_count;
    const double bc1 = 1.0 - std::pow(opt.beta1, opt.step_count);
    const double bc2 = 1.0 - std::pow(opt.beta2, opt.step_count);
    for (std::size_t k = 0; k < params.blocks.size(); ++k) {
        const Matrix& g = grads.blocks[k].value;
        opt.m[k] = opt.beta1 * opt.m[k] + (1.0 - opt.beta1) * g;
        opt.v[k] = opt.beta2 * opt.v[k] + (1.0 - opt.beta2) * g.cwiseProduct(g);
        const Matrix mhat = opt.m[k] / bc1;
        const Matrix vhat = opt.v[k] / bc2;
        params.blocks[k].value.array() -=
            opt.lr * mhat.array() / (vhat.array().sqrt() + opt.eps);
    }
}

// --- training ---------------------------------------------------------------

std::vector<std::pair<int, int>> ocean_cells(const BathymetryGrid& bathy) {
    std::vector<std::pair<int, int>> cells;
    for (int j = 0; j < bathy.spec.nlat; ++j)
        for (int i = 0; i < bathy.spec.nlon; ++i)
            if (!bathy.is_land(j, i)) cells.emplace_back(j, i);
    return cells;
}

Matrix ocean_query_encodings(const BathymetryGrid& bathy, const ModelConfig& cfg) {
    std::vector<GeoPoint> pts;
    for (const auto& [j, i] : ocean_cells(bathy))
        pts.emplace_back(bathy.spec.lon_center(i), bathy.spec.lat_center(j));
    return encode_positions(pts, bathy, cfg);
}

TrainResult train(const std::vector<FrameSeries>& dataset, const SensorNetwork& sensors,
                  const BathymetryGrid& bathy, const ModelConfig& cfg,
                  const TrainSchedule& schedule) {
    cfg.validate();
    std::vector<std::pair<int, int>> all_frames;  // (series, frame)
    for (std::size_t s = 0; s < dataset.size(); ++s)
        for (int f = 0; f < dataset[s].frame_count(); ++f)
            all_frames.emplace_back(static_cast<int>(s), f);
    if (all_frames.empty()) throw Error("empty-dataset", "no frames to train on");

    // Uniform-random 80/20 frame split via a seeded shuffle.
    Rng split_rng(schedule.frame_split_seed);
    for (std::size_t i = all_frames.size() - 1; i > 0; --i)
        std::swap(all_frames[i], all_frames[split_rng.next_below(i + 1)]);
    const auto n_train = std::max<std::size_t>(
        1, static_cast<std::size_t>(0.8 * static_cast<double>(all_frames.size())));
    all_frames.resize(n_train);

    double scale = 0.0;
    for (const auto& [s, f] : all_frames)
        scale = std::max(scale, dataset[static_cast<std::size_t>(s)].eta[static_cast<std::size_t>(f)]
                                    .abs()
                                    .maxCoeff());
    if (scale <= 0.0) scale = 1.0;

    ModelParams params = init_params(cfg);
    params.scale = scale;
    TrainResult result;
    if (schedule.steps <= 0) {
        result.params = std::move(params);
        return result;
    }

    std::vector<GeoPoint> sensor_pts;
    for (const auto& s : sensors.sensors) sensor_pts.push_back(s.location);
    const auto cells = ocean_cells(bathy);
    const GridSpec& spec = bathy.spec;

    AdamState opt = init_adam(params, schedule.lr);
    ModelParams grads = zeros_like(params);
    Rng rng = Rng(cfg.seed).fork(1);

    for (int stepi = 0; stepi < schedule.steps; ++stepi) {
        std::vector<TrainingSample> batch;
        batch.reserve(static_cast<std::size_t>(schedule.batch_frames));
        for (int b = 0; b < schedule.batch_frames; ++b) {
            const auto& [si, fi] = all_frames[rng.next_below(n_train)];
            const Field& eta = dataset[static_cast<std::size_t>(si)].eta[static_cast<std::size_t>(fi)];

            TrainingSample sample;
            sample.readings.t = dataset[static_cast<std::size_t>(si)].times[static_cast<std::size_t>(fi)];
            sample.readings.locations = sensor_pts;
            for (const auto& p : sensor_pts)
                sample.readings.values.push_back(sample_field(eta, bathy, p));

            // Half the queries target cells carrying wave signal.
            std::vector<std::pair<int, int>> wave_cells;
            for (const auto& c : cells)
                if (std::abs(eta(c.first, c.second)) > 1e-4) wave_cells.push_back(c);
            const int n_wave = wave_cells.empty() ? 0 : schedule.queries_per_frame / 2;
            const int n_uniform = schedule.queries_per_frame - n_wave;
            auto push_query = [&](const std::pair<int, int>& c) {
                sample.queries.emplace_back(spec.lon_center(c.second), spec.lat_center(c.first));
            };
            for (int q = 0; q < n_uniform; ++q) push_query(cells[rng.next_below(cells.size())]);
            for (int q = 0; q < n_wave; ++q)
                push_query(wave_cells[rng.next_below(wave_cells.size())]);
            sample.truths.resize(static_cast<Eigen::Index>(sample.queries.size()));
            for (std::size_t q = 0; q < sample.queries.size(); ++q) {
                const int i = static_cast<int>(
                    std::floor((sample.queries[q].lon - spec.lon_min) / spec.dlon()));
                const int j = static_cast<int>(
                    std::floor((sample.queries[q].lat - spec.lat_min) / spec.dlat()));
                sample.truths(static_cast<Eigen::Index>(q)) = eta(j, i);
            }
            batch.push_back(std::move(sample));
        }

        const double step_loss = gradients(params, batch, bathy, grads);
        if (!std::isfinite(step_loss))
            throw Error("divergence", "non-finite loss at step " + std::to_string(stepi));
        adam_step(params, grads, opt);
        result.loss_history.push_back(step_loss);
    }
    result.params = std::move(params);
    return result;
}

Field reconstruct_field(const ModelParams& params, const SensorReadings& readings,
                        const BathymetryGrid& bathy) {
    const Matrix a_s = encode_positions(readings.locations, bathy, params.cfg);
    const Matrix z = encode(readings, a_s, params);
    const Matrix a_q = ocean_query_encodings(bathy, params.cfg);
    const Eigen::VectorXd values = decode(z, a_q, params);

    Field out = Field::Constant(bathy.spec.nlat, bathy.spec.nlon,
                                std::numeric_limits<double>::quiet_NaN());
    const auto cells = ocean_cells(bathy);
    for (std::size_t k = 0; k < cells.size(); ++k)
        out(cells[k].first, cells[k].second) = values(static_cast<Eigen::Index>(k));
    return out;
}

// --- checkpoint io -----------------------------------------------------------

namespace {

json config_to_json(const ModelConfig& c) {
    return {{"num_freq_bands", c.num_freq_bands},
            {"max_freq", c.max_freq},
            {"latent_rows", c.latent_rows},
            {"latent_dim", c.latent_dim},
            {"num_encoder_blocks", c.num_encoder_blocks},
            {"num_heads", c.num_heads},
            {"mlp_hidden", c.mlp_hidden},
            {"seed", c.seed}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    c.num_freq_bands = j.at("num_freq_bands");
    c.max_freq = j.at("max_freq");
    c.latent_rows = j.at("latent_rows");
    c.latent_dim = j.at("latent_dim");
    c.num_encoder_blocks = j.at("num_encoder_blocks");
    c.num_heads = j.at("num_heads");
    c.mlp_hidden = j.at("mlp_hidden");
    c.seed = j.at("seed");
    return c;
}

}  // namespace

void save_checkpoint(const ModelParams& params, const std::filesystem::path& json_path) {
    json manifest = {{"config", config_to_json(params.cfg)}, {"scale", params.scale}};
    manifest["blocks"] = json::array();
    std::vector<float> flat;
    for (const auto& b : params.blocks) {
        manifest["blocks"].push_back(
            {{"name", b.name}, {"rows", b.value.rows()}, {"cols", b.value.cols()}});
        for (Eigen::Index r = 0; r < b.value.rows(); ++r)
            for (Eigen::Index c = 0; c < b.value.cols(); ++c)
                flat.push_back(static_cast<float>(b.value(r, c)));
    }
    std::ofstream out(json_path);
    if (!out) throw Error("io-open", "cannot write " + json_path.string());
    out << manifest.dump(2) << "\n";
    auto bin_path = json_path;
    bin_path.replace_extension(".bin");
    io::write_f32(bin_path, flat);
}

ModelParams load_checkpoint(const std::filesystem::path& json_path) {
    std::ifstream in(json_path);
    if (!in) throw Error("io-open", "cannot read " + json_path.string());
    json manifest = json::parse(in);

    ModelParams params;
    params.cfg = config_from_json(manifest.at("config"));
    params.cfg.validate();
    params.scale = manifest.at("scale");

    std::size_t total = 0;
    for (const auto& b : manifest.at("blocks"))
        total += b.at("rows").get<std::size_t>() * b.at("cols").get<std::size_t>();
    auto bin_path = json_path;
    bin_path.replace_extension(".bin");
    const auto flat = io::read_f32(bin_path, total);

    std::size_t pos = 0;
    for (const auto& b : manifest.at("blocks")) {
        const auto rows = b.at("rows").get<Eigen::Index>();
        const auto cols = b.at("cols").get<Eigen::Index>();
        Matrix m(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = flat[pos++];
        params.blocks.push_back({b.at("name").get<std::string>(), std::move(m)});
    }
    return params;
}

}  // namespace wavesense
