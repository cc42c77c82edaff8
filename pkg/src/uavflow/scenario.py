"""Scenario schema: defaults, validation, (de)serialization, derived arrays.

A scenario is a JSON object; every omitted field takes its default (the
simulation-parameter table of the reference setup).  ``parse_scenario``
returns a fully-populated, validated `Scenario` whose ``raw`` dict is
canonical: serializing and re-parsing reproduces it exactly.

All dBm values are converted to watts here and nowhere else.
"""

import copy
import hashlib
import json
import math

import numpy as np

from .errors import RangeError, SchemaError
from .mission import InterfererPolicy, MotionConfig
from .radio import ChannelParams, FadingModel, SafetyParams, reference_loss_db
from .state import NetworkState

SCHEMA_VERSION = 1
MODES = ("reckless-coop", "reckless-noncoop", "smart")
POLICIES = ("naive", "reckless-mobile", "smart")
DIMS = ("xy", "xz", "yz", "xyz")
TOPOLOGIES = ("line", "mesh")

DEFAULTS = {
    "schema_version": SCHEMA_VERSION,
    "seed": 1,
    "topology": "line",
    "mode": "reckless-noncoop",
    "bs": {"pos": [0.0, 0.0, 15.0]},
    "ue": {"pos": [200.0, 0.0, 25.0], "role": "aerial"},
    "relays": {"count": 8, "positions": None},
    "interferers": [
        {
            "pos": [100.0, 55.0, 20.0],
            "power_dbm": 30.0,
            "policy": "naive",
            "tau": 2,
            "role": "aerial",
            "waypoints": None,
            "speed": 5.0,
        }
    ],
    "primary_ues": [{"pos": [100.0, 90.0, 0.0]}],
    "channel": {
        "alpha_a2a": 2.05,
        "alpha_a2g": 2.32,
        "carrier_hz": 2.0e9,
        "bandwidth_hz": 1.0e4,
        "noise_w": None,       # default: thermal floor -174 dBm/Hz * B
        "eta_a2a_db": None,    # default: free-space reference loss at 1 m
        "eta_a2g_db": None,
    },
    "safety": {"chi": 1.0, "zeta": 1.0, "kappa": 10.0, "y0": 1.0e-3, "r_int": 5.0},
    "weights": {"source": 10.0, "sink": 10.0, "relay": 1.0},
    "constraints": {"p_max_dbm": 20.0, "i_max_dbm": -30.0, "r_th_bps": 3.0e4},
    "motion": {"dt": 0.08, "dims": "xyz", "z_min": 1.0, "max_step": 5.0},
    "solver": {
        "eps_flow_bps": 1.0,
        "max_iters": 500,
        "sca_eps_bps": 1.0,
        "sca_max_iters": 100,
    },
    "fading": "unit",
}

_INTERFERER_DEFAULTS = DEFAULTS["interferers"][0]
_PRIMARY_UE_DEFAULTS = DEFAULTS["primary_ues"][0]


def dbm_to_watts(dbm):
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(w):
    return 10.0 * math.log10(w) + 30.0


def _fail(field, msg, cls=SchemaError):
    raise cls(f"{field}: {msg}", field=field)


def _num(value, field, lo=None, hi=None, strict_lo=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(field, f"expected a number, got {value!r}")
    v = float(value)
    if not math.isfinite(v):
        _fail(field, "must be finite", RangeError)
    if lo is not None and (v < lo or (strict_lo and v == lo)):
        _fail(field, f"must be {'>' if strict_lo else '>='} {lo}, got {v}", RangeError)
    if hi is not None and v > hi:
        _fail(field, f"must be <= {hi}, got {v}", RangeError)
    return v


def _integer(value, field, lo=None):
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(field, f"expected an integer, got {value!r}")
    if lo is not None and value < lo:
        _fail(field, f"must be >= {lo}, got {value}", RangeError)
    return value


def _choice(value, field, options):
    if value not in options:
        _fail(field, f"expected one of {options}, got {value!r}")
    return value


def _pos3(value, field, z_lo=0.0):
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        _fail(field, f"expected [x, y, z], got {value!r}")
    out = [_num(v, f"{field}[{k}]") for k, v in enumerate(value)]
    if out[2] < z_lo:
        _fail(f"{field}[2]", f"altitude must be >= {z_lo}, got {out[2]}", RangeError)
    return out


def _merge_section(defaults, overrides, field):
    if not isinstance(overrides, dict):
        _fail(field, f"expected an object, got {overrides!r}")
    merged = copy.deepcopy(defaults)
    for key, val in overrides.items():
        if key not in defaults:
            _fail(f"{field}.{key}", "unknown field")
        merged[key] = copy.deepcopy(val)
    return merged


def canonical_config(overrides):
    """Apply defaults and validate; returns the canonical raw dict."""
    if not isinstance(overrides, dict):
        raise SchemaError("scenario config must be a JSON object", field="<root>")
    raw = {}
    known = set(DEFAULTS)
    for key in overrides:
        if key not in known:
            _fail(key, "unknown field")

    ver = overrides.get("schema_version", SCHEMA_VERSION)
    if ver != SCHEMA_VERSION:
        _fail("schema_version", f"unsupported version {ver!r}")
    raw["schema_version"] = SCHEMA_VERSION
    raw["seed"] = _integer(overrides.get("seed", DEFAULTS["seed"]), "seed", lo=0)
    raw["topology"] = _choice(overrides.get("topology", DEFAULTS["topology"]),
                              "topology", TOPOLOGIES)
    raw["mode"] = _choice(overrides.get("mode", DEFAULTS["mode"]), "mode", MODES)

    bs = _merge_section(DEFAULTS["bs"], overrides.get("bs", {}), "bs")
    bs["pos"] = _pos3(bs["pos"], "bs.pos")
    raw["bs"] = bs

    ue_over = overrides.get("ue", {})
    if not isinstance(ue_over, dict):
        _fail("ue", f"expected an object, got {ue_over!r}")
    ue_over = dict(ue_over)
    altitude = ue_over.pop("altitude", None)
    ue = _merge_section(DEFAULTS["ue"], ue_over, "ue")
    if altitude is not None:
        ue["pos"] = [DEFAULTS["ue"]["pos"][0], DEFAULTS["ue"]["pos"][1],
                     _num(altitude, "ue.altitude", lo=0.0)]
    ue["pos"] = _pos3(ue["pos"], "ue.pos")
    _choice(ue["role"], "ue.role", ("aerial", "ground"))
    raw["ue"] = ue

    relays = _merge_section(DEFAULTS["relays"], overrides.get("relays", {}), "relays")
    count = _integer(relays["count"], "relays.count", lo=1)
    if relays["positions"] is not None:
        if not isinstance(relays["positions"], list) or not relays["positions"]:
            _fail("relays.positions", "expected a non-empty list of [x, y, z]")
        relays["positions"] = [
            _pos3(p, f"relays.positions[{k}]")
            for k, p in enumerate(relays["positions"])
        ]
        relays["count"] = len(relays["positions"])
    else:
        relays["count"] = count
    raw["relays"] = relays

    jam_list = overrides.get("interferers", DEFAULTS["interferers"])
    if not isinstance(jam_list, list):
        _fail("interferers", f"expected a list, got {jam_list!r}")
    jams = []
    for k, item in enumerate(jam_list):
        jam = _merge_section(_INTERFERER_DEFAULTS, item, f"interferers[{k}]")
        jam["pos"] = _pos3(jam["pos"], f"interferers[{k}].pos")
        _num(jam["power_dbm"], f"interferers[{k}].power_dbm")
        _choice(jam["policy"], f"interferers[{k}].policy", POLICIES)
        _integer(jam["tau"], f"interferers[{k}].tau", lo=1)
        _choice(jam["role"], f"interferers[{k}].role", ("aerial", "ground"))
        if jam["waypoints"] is not None:
            jam["waypoints"] = [
                _pos3(w, f"interferers[{k}].waypoints[{j}]")
                for j, w in enumerate(jam["waypoints"])
            ]
        _num(jam["speed"], f"interferers[{k}].speed", lo=0.0)
        if jam["policy"] == "smart" and raw["mode"] != "smart":
            _fail(f"interferers[{k}].policy",
                  "policy 'smart' requires mode 'smart'")
        if jam["policy"] == "reckless-mobile" and not jam["waypoints"]:
            _fail(f"interferers[{k}].waypoints",
                  "policy 'reckless-mobile' needs waypoints")
        jams.append(jam)
    raw["interferers"] = jams

    pue_list = overrides.get("primary_ues", DEFAULTS["primary_ues"])
    if not isinstance(pue_list, list):
        _fail("primary_ues", f"expected a list, got {pue_list!r}")
    pues = []
    for k, item in enumerate(pue_list):
        pue = _merge_section(_PRIMARY_UE_DEFAULTS, item, f"primary_ues[{k}]")
        pue["pos"] = _pos3(pue["pos"], f"primary_ues[{k}].pos")
        pues.append(pue)
    raw["primary_ues"] = pues

    ch = _merge_section(DEFAULTS["channel"], overrides.get("channel", {}), "channel")
    ch["alpha_a2a"] = _num(ch["alpha_a2a"], "channel.alpha_a2a", lo=2.0)
    ch["alpha_a2g"] = _num(ch["alpha_a2g"], "channel.alpha_a2g", lo=2.0)
    ch["carrier_hz"] = _num(ch["carrier_hz"], "channel.carrier_hz", lo=0.0, strict_lo=True)
    ch["bandwidth_hz"] = _num(ch["bandwidth_hz"], "channel.bandwidth_hz", lo=0.0, strict_lo=True)
    if ch["noise_w"] is not None:
        ch["noise_w"] = _num(ch["noise_w"], "channel.noise_w", lo=0.0, strict_lo=True)
    for key in ("eta_a2a_db", "eta_a2g_db"):
        if ch[key] is not None:
            ch[key] = _num(ch[key], f"channel.{key}")
    raw["channel"] = ch

    saf = _merge_section(DEFAULTS["safety"], overrides.get("safety", {}), "safety")
    saf["chi"] = _num(saf["chi"], "safety.chi", lo=0.0)
    saf["zeta"] = _num(saf["zeta"], "safety.zeta", lo=0.0)
    saf["kappa"] = _num(saf["kappa"], "safety.kappa", lo=0.0)
    saf["y0"] = _num(saf["y0"], "safety.y0", lo=0.0, strict_lo=True)
    saf["r_int"] = _num(saf["r_int"], "safety.r_int", lo=0.0, strict_lo=True)
    raw["safety"] = saf

    wts = _merge_section(DEFAULTS["weights"], overrides.get("weights", {}), "weights")
    for key in ("source", "sink", "relay"):
        wts[key] = _num(wts[key], f"weights.{key}", lo=0.0, strict_lo=True)
    raw["weights"] = wts

    cons = _merge_section(DEFAULTS["constraints"], overrides.get("constraints", {}),
                          "constraints")
    cons["p_max_dbm"] = _num(cons["p_max_dbm"], "constraints.p_max_dbm")
    cons["i_max_dbm"] = _num(cons["i_max_dbm"], "constraints.i_max_dbm")
    cons["r_th_bps"] = _num(cons["r_th_bps"], "constraints.r_th_bps", lo=0.0)
    raw["constraints"] = cons

    mot = _merge_section(DEFAULTS["motion"], overrides.get("motion", {}), "motion")
    mot["dt"] = _num(mot["dt"], "motion.dt", lo=0.0)
    _choice(mot["dims"], "motion.dims", DIMS)
    mot["z_min"] = _num(mot["z_min"], "motion.z_min", lo=0.0)
    mot["max_step"] = _num(mot["max_step"], "motion.max_step", lo=0.0, strict_lo=True)
    raw["motion"] = mot

    sol = _merge_section(DEFAULTS["solver"], overrides.get("solver", {}), "solver")
    sol["eps_flow_bps"] = _num(sol["eps_flow_bps"], "solver.eps_flow_bps", lo=0.0)
    sol["max_iters"] = _integer(sol["max_iters"], "solver.max_iters", lo=1)
    sol["sca_eps_bps"] = _num(sol["sca_eps_bps"], "solver.sca_eps_bps", lo=0.0)
    sol["sca_max_iters"] = _integer(sol["sca_max_iters"], "solver.sca_max_iters", lo=1)
    raw["solver"] = sol

    raw["fading"] = _choice(overrides.get("fading", DEFAULTS["fading"]),
                            "fading", ("unit", "complex-gaussian"))
    return raw


class Scenario:
    """Immutable problem description plus derived arrays.

    Entity index space: nodes 0..N-1 (0 = BS, N-1 = UE), then interferers,
    then primary UEs.  ``pair_coef``/``pair_alpha`` give the per-pair channel
    constant |g|^2 * 10^(-eta/10) and path-loss exponent, with the fading
    realization frozen from the seed for the whole run.
    """

    def __init__(self, raw):
        self.raw = raw
        self.seed = raw["seed"]
        self.topology = raw["topology"]
        self.mode = raw["mode"]
        self.cooperative = self.mode == "reckless-coop"

        bs_pos = np.array(raw["bs"]["pos"], dtype=float)
        ue_pos = np.array(raw["ue"]["pos"], dtype=float)
        relays = raw["relays"]
        if relays["positions"] is not None:
            relay_pos = np.array(relays["positions"], dtype=float)
        else:
            k = relays["count"]
            frac = np.arange(1, k + 1, dtype=float)[:, None] / (k + 1)
            relay_pos = bs_pos[None, :] + frac * (ue_pos - bs_pos)[None, :]
        self.node_pos0 = np.vstack([bs_pos, relay_pos, ue_pos])
        self.n_nodes = self.node_pos0.shape[0]
        self.source = 0
        self.sink = self.n_nodes - 1
        self.movable = np.arange(1, self.n_nodes - 1, dtype=np.int64)
        self.node_ground = np.zeros(self.n_nodes, dtype=bool)
        self.node_ground[0] = True
        self.node_ground[-1] = raw["ue"]["role"] == "ground"

        jams = raw["interferers"]
        self.n_interferers = len(jams)
        self.jam_pos0 = np.array([j["pos"] for j in jams], dtype=float).reshape(-1, 3)
        self.pj_nominal = np.array([dbm_to_watts(j["power_dbm"]) for j in jams])
        self.jam_ground = np.array([j["role"] == "ground" for j in jams], dtype=bool)
        self.policies = [
            InterfererPolicy(
                kind=j["policy"],
                tau=j["tau"],
                waypoints=None if j["waypoints"] is None
                else np.array(j["waypoints"], dtype=float),
                speed=j["speed"],
            )
            for j in jams
        ]

        pues = raw["primary_ues"]
        self.n_primary_ues = len(pues)
        self.pue_pos = np.array([u["pos"] for u in pues], dtype=float).reshape(-1, 3)

        ch = raw["channel"]
        eta_ref = reference_loss_db(ch["carrier_hz"])
        noise = ch["noise_w"]
        if noise is None:
            noise = dbm_to_watts(-174.0 + 10.0 * math.log10(ch["bandwidth_hz"]))
        self.channel = ChannelParams(
            alpha_a2a=ch["alpha_a2a"],
            alpha_a2g=ch["alpha_a2g"],
            eta_a2a_db=eta_ref if ch["eta_a2a_db"] is None else ch["eta_a2a_db"],
            eta_a2g_db=eta_ref if ch["eta_a2g_db"] is None else ch["eta_a2g_db"],
            carrier_hz=ch["carrier_hz"],
            bandwidth_hz=ch["bandwidth_hz"],
            noise_w=noise,
        )
        saf = raw["safety"]
        self.safety = SafetyParams(chi=saf["chi"], zeta=saf["zeta"],
                                   kappa=saf["kappa"], y0=saf["y0"],
                                   r_int=saf["r_int"])

        wts = raw["weights"]
        self.weights = np.full(self.n_nodes, wts["relay"], dtype=float)
        self.weights[self.source] = wts["source"]
        self.weights[self.sink] = wts["sink"]

        cons = raw["constraints"]
        self.p_max_w = dbm_to_watts(cons["p_max_dbm"])
        self.i_max_w = np.full(self.n_interferers, dbm_to_watts(cons["i_max_dbm"]))
        self.r_th_bps = cons["r_th_bps"]

        mot = raw["motion"]
        self.motion = MotionConfig(dt=mot["dt"], dims=mot["dims"],
                                   z_min=mot["z_min"], max_step=mot["max_step"])

        sol = raw["solver"]
        self.eps_flow_bps = sol["eps_flow_bps"]
        self.max_iters = sol["max_iters"]
        self.sca_eps_bps = sol["sca_eps_bps"]
        self.sca_max_iters = sol["sca_max_iters"]

        self.fading = FadingModel(raw["fading"])
        self._build_pair_tables()
        self._build_edges()

    # -- derived tables ----------------------------------------------------

    def _build_pair_tables(self):
        n, m, r = self.n_nodes, self.n_interferers, self.n_primary_ues
        total = n + m + r
        ground = np.concatenate([
            self.node_ground,
            self.jam_ground,
            np.ones(r, dtype=bool),
        ])
        a2g = ground[:, None] | ground[None, :]   # any terrestrial endpoint
        ch = self.channel
        self.pair_alpha = np.where(a2g, ch.alpha_a2g, ch.alpha_a2a)
        pair_eta = np.where(a2g, ch.eta_a2g_db, ch.eta_a2a_db)

        if self.fading is FadingModel.UNIT:
            g2 = np.ones((total, total))
        else:
            rng = np.random.default_rng(self.seed)
            g2 = np.ones((total, total))
            for a in range(total):
                for b in range(a + 1, total):
                    re, im = rng.normal(0.0, math.sqrt(0.5), 2)
                    g2[a, b] = g2[b, a] = re * re + im * im
        self.g2 = g2
        self.pair_coef = g2 * 10.0 ** (-pair_eta / 10.0)

    def _build_edges(self):
        n = self.n_nodes
        if self.topology == "line":
            pairs = [(i, i + 1) for i in range(n - 1)]
        else:
            pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
        self.edges = np.array(pairs, dtype=np.int64)

    # -- helpers -----------------------------------------------------------

    def entity_positions(self, state):
        return np.vstack([state.node_pos, state.jam_pos, self.pue_pos])

    def initial_state(self):
        return NetworkState(
            node_pos=self.node_pos0.copy(),
            jam_pos=self.jam_pos0.copy(),
            p=np.full(self.n_nodes, self.p_max_w),
            pj=self.pj_nominal.copy(),
            t=0,
            jam_path_s=np.zeros(self.n_interferers),
        )

    def kernel_args(self, state):
        """Argument tuple shared by the sir/gradient kernels."""
        n = self.n_nodes
        m = self.n_interferers
        saf = self.safety
        return (
            state.node_pos, state.p, state.jam_pos, state.pj,
            self.pair_coef[:n, :n], self.pair_alpha[:n, :n],
            self.pair_coef[n:n + m, :n], self.pair_alpha[n:n + m, :n],
            saf.chi, saf.zeta, saf.kappa, saf.y0, saf.r_int,
        )

    def scenario_hash(self):
        text = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def build_scenario(overrides):
    return Scenario(canonical_config(overrides))


def parse_scenario(text):
    """Parse a JSON scenario config into a validated Scenario."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}", field="<root>") from exc
    return build_scenario(data)


def serialize_scenario(scenario):
    return json.dumps(scenario.raw, sort_keys=True, indent=2) + "\n"


def apply_override(raw, field, value):
    """Set a (possibly virtual) dotted config field on a raw config dict.

    Understands ``ue.altitude`` (sets ue.pos[2]) and ``interferers.<key>``
    (sets the key on every interferer; value "naive"/"smart" on
    ``interferers.tau`` switches the policy instead, for smartness sweeps).
    """
    out = copy.deepcopy(raw)
    if field == "ue.altitude":
        out["ue"]["pos"][2] = float(value)
        return out
    parts = field.split(".")
    if parts[0] == "interferers" and len(parts) == 2:
        key = parts[1]
        for jam in out["interferers"]:
            if key == "tau" and isinstance(value, str):
                jam["policy"] = value
            else:
                jam[key] = value
        return out
    node = out
    for part in parts[:-1]:
        if not isinstance(node, dict) or part not in node:
            raise SchemaError(f"unknown sweep field {field!r}", field=field)
        node = node[part]
    if not isinstance(node, dict) or parts[-1] not in node:
        raise SchemaError(f"unknown sweep field {field!r}", field=field)
    node[parts[-1]] = value
    return out
