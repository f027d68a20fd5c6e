#include "dlda/mechanics.hpp"

#include "dlda/error.hpp"

namespace dlda {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_inputs(int d, JetSpan q, JetSpan v, const char* what) {
  if (static_cast<int>(q.size()) != d || static_cast<int>(v.size()) != d) {
    throw DimensionError(std::string(what) + ": expected " + std::to_string(d) + " coordinates, got " +
                         std::to_string(q.size()) + "/" + std::to_string(v.size()));
  }
}

std::vector<ad::Jet> concat(JetSpan a, JetSpan b) {
  std::vector<ad::Jet> out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

// F = -A^T A v for packed lower-triangular A given as (tri x B) jet rows.
std::vector<ad::Jet> rayleigh(const ad::Jet& a, JetSpan v, int d) {
  std::vector<ad::Jet> rows;
  rows.reserve(static_cast<std::size_t>(tri_size(d)));
  for (int k = 0; k < tri_size(d); ++k) rows.push_back(ad::row(a, k));
  std::vector<ad::Jet> u;
  for (int i = 0; i < d; ++i) {
    ad::Jet ui = rows[static_cast<std::size_t>(tri_index(i, 0))] * v[0];
    for (int j = 1; j <= i; ++j) ui = ui + rows[static_cast<std::size_t>(tri_index(i, j))] * v[static_cast<std::size_t>(j)];
    u.push_back(ui);
  }
  std::vector<ad::Jet> f;
  for (int j = 0; j < d; ++j) {
    ad::Jet s = rows[static_cast<std::size_t>(tri_index(j, j))] * u[static_cast<std::size_t>(j)];
    for (int i = j + 1; i < d; ++i) s = s + rows[static_cast<std::size_t>(tri_index(i, j))] * u[static_cast<std::size_t>(i)];
    f.push_back(-s);
  }
  return f;
}

std::vector<ad::Jet> free_force(const FreeForce& f, ParamSource& params, JetSpan q, JetSpan v, DropoutState* dropout) {
  const auto in = concat(q, v);
  ad::Jet out;
  if (dropout != nullptr) {
    const double saved = dropout->rate;
    dropout->rate = f.dropout_rate;
    out = f.net.forward(params, ad::vcat(in), dropout);
    dropout->rate = saved;
  } else {
    out = f.net.forward(params, ad::vcat(in));
  }
  std::vector<ad::Jet> rows;
  for (int i = 0; i < out.rows(); ++i) rows.push_back(ad::row(out, i));
  return rows;
}

std::vector<ad::Jet> rayleigh_force(const RayleighForce& f, ParamSource& params, JetSpan q, JetSpan v, int d) {
  return rayleigh(f.factor_net.forward(params, ad::vcat(q)), v, d);
}

std::vector<ad::Jet> plain_jets(ad::Tape& tape, const Eigen::VectorXd& x) {
  std::vector<ad::Jet> out;
  for (Eigen::Index i = 0; i < x.size(); ++i) out.emplace_back(tape.constant(Eigen::MatrixXd::Constant(1, 1, x(i))), 0, 0);
  return out;
}

}  // namespace

double ForceModel::dropout_rate() const {
  if (const auto* f = std::get_if<FreeForce>(&impl)) return f->dropout_rate;
  if (const auto* c = std::get_if<CombinedForce>(&impl)) return c->free.dropout_rate;
  return 0.0;
}

std::string to_string(LagrangianKind k) { return k == LagrangianKind::FreeMlp ? "free_mlp" : "mechanical"; }

std::string to_string(ForceKind k) {
  switch (k) {
    case ForceKind::None: return "none";
    case ForceKind::Free: return "free";
    case ForceKind::Rayleigh: return "rayleigh";
    case ForceKind::LinearRayleigh: return "linear_rayleigh";
    case ForceKind::Combined: return "combined";
  }
  return "none";
}

LagrangianKind lagrangian_kind_from_string(const std::string& s) {
  if (s == "free_mlp") return LagrangianKind::FreeMlp;
  if (s == "mechanical") return LagrangianKind::Mechanical;
  throw ConfigError("unknown lagrangian kind '" + s + "'");
}

ForceKind force_kind_from_string(const std::string& s) {
  for (ForceKind k : {ForceKind::None, ForceKind::Free, ForceKind::Rayleigh, ForceKind::LinearRayleigh, ForceKind::Combined})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown force kind '" + s + "'");
}

namespace {

template <class MakeMlp>
LagrangianModel build_lagrangian(int d, const LagrangianConfig& cfg, const std::string& prefix, MakeMlp mlp) {
  if (d < 1) throw ConfigError("lagrangian: dimension must be >= 1");
  LagrangianModel m;
  m.dim = d;
  if (cfg.kind == LagrangianKind::FreeMlp) {
    m.impl = FreeMlpLagrangian{mlp(prefix + ".net", MlpSpec{2 * d, cfg.hidden_dim, cfg.hidden_layers, 1})};
  } else {
    if (cfg.epsilon < 0.0) throw ConfigError("lagrangian: epsilon must be >= 0");
    MechanicalLagrangian mech;
    mech.lambda_net = mlp(prefix + ".lambda", MlpSpec{d, cfg.hidden_dim, cfg.hidden_layers, tri_size(d)});
    mech.potential_net =
        mlp(prefix + ".potential", MlpSpec{cfg.potential_uses_velocity ? 2 * d : d, cfg.hidden_dim, cfg.hidden_layers, 1});
    mech.epsilon = cfg.epsilon;
    mech.potential_uses_velocity = cfg.potential_uses_velocity;
    m.impl = mech;
  }
  return m;
}

template <class MakeMlp, class MakeSlice>
ForceModel build_force(int d, const ForceConfig& cfg, const std::string& prefix, MakeMlp mlp, MakeSlice slice) {
  if (d < 1) throw ConfigError("force: dimension must be >= 1");
  if (cfg.dropout < 0.0 || cfg.dropout >= 1.0) throw ConfigError("force: dropout must lie in [0, 1)");
  ForceModel m;
  m.dim = d;
  auto free = [&] {
    return FreeForce{mlp(prefix + ".free", MlpSpec{2 * d, cfg.hidden_dim, cfg.hidden_layers, d}), cfg.dropout};
  };
  auto ray = [&] { return RayleighForce{mlp(prefix + ".rayleigh", MlpSpec{d, cfg.hidden_dim, cfg.hidden_layers, tri_size(d)})}; };
  switch (cfg.kind) {
    case ForceKind::None: m.impl = NoForce{}; break;
    case ForceKind::Free: m.impl = free(); break;
    case ForceKind::Rayleigh: m.impl = ray(); break;
    case ForceKind::LinearRayleigh: m.impl = LinearRayleighForce{slice(prefix + ".factor", tri_size(d))}; break;
    case ForceKind::Combined: {
      CombinedForce c;
      c.rayleigh = ray();
      c.free = free();
      m.impl = c;
      break;
    }
  }
  return m;
}

}  // namespace

LagrangianModel create_lagrangian(ParameterStore& store, int d, const LagrangianConfig& cfg, const std::string& prefix) {
  return build_lagrangian(
      d, cfg, prefix, [&](const std::string& p, const MlpSpec& s) { return Mlp::create(store, p, s); });
}

LagrangianModel bind_lagrangian(const ParameterStore& store, int d, const LagrangianConfig& cfg,
                                const std::string& prefix) {
  return build_lagrangian(
      d, cfg, prefix, [&](const std::string& p, const MlpSpec& s) { return Mlp::bind(store, p, s); });
}

ForceModel create_force(ParameterStore& store, int d, const ForceConfig& cfg, const std::string& prefix) {
  return build_force(
      d, cfg, prefix, [&](const std::string& p, const MlpSpec& s) { return Mlp::create(store, p, s); },
      [&](const std::string& name, int n) { return store.add(name, n, 1); });
}

ForceModel bind_force(const ParameterStore& store, int d, const ForceConfig& cfg, const std::string& prefix) {
  return build_force(
      d, cfg, prefix, [&](const std::string& p, const MlpSpec& s) { return Mlp::bind(store, p, s); },
      [&](const std::string& name, int n) {
        const std::size_t i = store.find(name);
        if (store.slice(i).rows != n || store.slice(i).cols != 1) throw ConfigError("parameter layout mismatch at " + name);
        return i;
      });
}

void init_lagrangian(const LagrangianModel& model, ParameterStore& store, Rng& rng) {
  std::visit(overloaded{[&](const FreeMlpLagrangian& m) { init_params(m.net, store, rng); },
                        [&](const MechanicalLagrangian& m) {
                          init_params(m.lambda_net, store, rng);
                          init_params(m.potential_net, store, rng);
                          // Start near M = I rather than M = eps I.
                          auto b = store.view(m.lambda_net.bias_slice(m.lambda_net.num_layers() - 1));
                          for (int i = 0; i < model.dim; ++i) b(tri_index(i, i), 0) = 1.0;
                        },
                        [](const AnalyticLagrangian&) {}},
             model.impl);
}

void init_force(const ForceModel& model, ParameterStore& store, Rng& rng) {
  const int d = model.dim;
  std::visit(overloaded{[](const NoForce&) {}, [&](const FreeForce& f) { init_params(f.net, store, rng); },
                        [&](const RayleighForce& f) { init_params(f.factor_net, store, rng); },
                        [&](const LinearRayleighForce& f) {
                          auto a = store.view(f.factor_slice);
                          a.setZero();
                          // A = 0 is a stationary point of -A^T A v, so start from a small diagonal.
                          for (int i = 0; i < d; ++i) a(tri_index(i, i), 0) = 0.1;
                        },
                        [&](const CombinedForce& f) {
                          init_params(f.rayleigh.factor_net, store, rng);
                          init_params(f.free.net, store, rng);
                        },
                        [](const AnalyticForce&) {}},
             model.impl);
}

LagrangianModel analytic_lagrangian(int d, std::function<ad::Jet(JetSpan, JetSpan)> fn) {
  return LagrangianModel{d, AnalyticLagrangian{std::move(fn)}};
}

ForceModel analytic_force(int d, std::function<std::vector<ad::Jet>(JetSpan, JetSpan)> fn) {
  return ForceModel{d, AnalyticForce{std::move(fn)}};
}

ForceModel zero_force(int d) { return ForceModel{d, NoForce{}}; }

ad::Jet lagrangian_jet(const LagrangianModel& model, ParamSource& params, JetSpan q, JetSpan v) {
  const int d = model.dim;
  check_inputs(d, q, v, "lagrangian_eval");
  return std::visit(
      overloaded{[&](const FreeMlpLagrangian& m) { return m.net.forward(params, ad::vcat(concat(q, v))); },
                 [&](const MechanicalLagrangian& m) {
                   const ad::Jet qin = ad::vcat(q);
                   const ad::Jet lam = m.lambda_net.forward(params, qin);
                   ad::Jet kin;
                   bool have = false;
                   if (m.epsilon != 0.0) {
                     kin = v[0] * v[0];
                     for (int i = 1; i < d; ++i) kin = kin + v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
                     kin = m.epsilon * kin;
                     have = true;
                   }
                   for (int i = 0; i < d; ++i) {
                     ad::Jet w = ad::row(lam, tri_index(i, 0)) * v[0];
                     for (int j = 1; j <= i; ++j) w = w + ad::row(lam, tri_index(i, j)) * v[static_cast<std::size_t>(j)];
                     kin = have ? kin + w * w : w * w;
                     have = true;
                   }
                   const ad::Jet u = m.potential_uses_velocity ? m.potential_net.forward(params, ad::vcat(concat(q, v)))
                                                               : m.potential_net.forward(params, qin);
                   return kin - u;
                 },
                 [&](const AnalyticLagrangian& m) { return m.fn(q, v); }},
      model.impl);
}

std::vector<ad::Jet> force_jet(const ForceModel& model, ParamSource& params, JetSpan q, JetSpan v,
                               DropoutState* dropout) {
  const int d = model.dim;
  check_inputs(d, q, v, "force_eval");
  return std::visit(
      overloaded{[&](const NoForce&) {
                   std::vector<ad::Jet> out;
                   ad::Tape& t = *v[0].value().tape();
                   for (int i = 0; i < d; ++i)
                     out.emplace_back(t.constant(Eigen::MatrixXd::Zero(1, v[0].cols())), v[0].dirs(), v[0].order());
                   return out;
                 },
                 [&](const FreeForce& f) { return free_force(f, params, q, v, dropout); },
                 [&](const RayleighForce& f) { return rayleigh_force(f, params, q, v, d); },
                 [&](const LinearRayleighForce& f) {
                   const ad::Var a = ad::broadcast_cols(params.get(f.factor_slice), v[0].cols());
                   return rayleigh(ad::Jet(a, v[0].dirs(), v[0].order()), v, d);
                 },
                 [&](const CombinedForce& f) {
                   auto r = rayleigh_force(f.rayleigh, params, q, v, d);
                   const auto g = free_force(f.free, params, q, v, dropout);
                   for (int i = 0; i < d; ++i) r[static_cast<std::size_t>(i)] = r[static_cast<std::size_t>(i)] + g[static_cast<std::size_t>(i)];
                   return r;
                 },
                 [&](const AnalyticForce& f) {
                   auto out = f.fn(q, v);
                   if (static_cast<int>(out.size()) != d) throw DimensionError("analytic force: wrong output size");
                   return out;
                 }},
      model.impl);
}

double lagrangian_eval(const LagrangianModel& model, const ParameterStore& params, const Eigen::VectorXd& q,
                       const Eigen::VectorXd& v) {
  if (q.size() != model.dim || v.size() != model.dim) throw DimensionError("lagrangian_eval: dimension mismatch");
  ad::Tape tape;
  ParamSource src(tape, params, false);
  const auto qj = plain_jets(tape, q);
  const auto vj = plain_jets(tape, v);
  return lagrangian_jet(model, src, qj, vj).value().scalar();
}

Eigen::MatrixXd mass_matrix(const LagrangianModel& model, const ParameterStore& params, const Eigen::VectorXd& q) {
  const auto* m = std::get_if<MechanicalLagrangian>(&model.impl);
  if (m == nullptr) throw ConfigError("mass_matrix: requires the mechanical Lagrangian");
  const int d = model.dim;
  if (q.size() != d) throw DimensionError("mass_matrix: dimension mismatch");
  const Eigen::VectorXd lam = m->lambda_net.forward(params, Eigen::MatrixXd(q)).col(0);
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j <= i; ++j) l(i, j) = lam(tri_index(i, j));
  Eigen::MatrixXd mm = l.transpose() * l;
  mm.diagonal().array() += m->epsilon;
  return mm;
}

Eigen::VectorXd force_eval(const ForceModel& model, const ParameterStore& params, const Eigen::VectorXd& q,
                           const Eigen::VectorXd& v, DropoutState* dropout) {
  if (q.size() != model.dim || v.size() != model.dim) throw DimensionError("force_eval: dimension mismatch");
  ad::Tape tape;
  ParamSource src(tape, params, false);
  const auto qj = plain_jets(tape, q);
  const auto vj = plain_jets(tape, v);
  const auto f = force_jet(model, src, qj, vj, dropout);
  Eigen::VectorXd out(model.dim);
  for (int i = 0; i < model.dim; ++i) out(i) = f[static_cast<std::size_t>(i)].value().scalar();
  return out;
}

}  // namespace dlda
