"""
Synthetic provenance range: benign workstation and server activity with
injected attack campaigns, their labels and ground-truth query graphs.
"""
import collections
import os

import numpy as np

from ..config import options, setup_logger
from ..ingest import AuditEvent, write_events
from ..ppg import DAY_MS
from ..querykit import AttrGraph, save_graph
from ..util import _ensure_dir, _make_list, write_json
from ..vocab import (
    EdgeOp, EntityKind, EventDir, abstract_node, normalize_name
)

LOGGER = setup_logger(__name__)

# midnight UTC, 2023-11-14
ORIGIN_MS = 19675 * DAY_MS

CAMPAIGNS = ["upgrade_hijack", "shell_recon_exfil", "credential_theft"]

# benign events per user; populations grow with the event budget
_EVENTS_PER_USER = 25000

_BEHAVIOURS = [
    ("browse", 0.30), ("shell", 0.25), ("dev", 0.15), ("daemon", 0.20),
    ("sync", 0.10),
]


class ScenarioSpec(object):
    """
    Parameters
    ----------
    seed : int, optional
        Defaults to ``bench.seed``.

    events : int, optional
        Benign background events. Defaults to ``bench.events``.

    days : int, optional
        Days the background is spread over. Defaults to ``bench.days``.

    campaigns : list of str, optional
        Attack templates to inject, by name. Defaults to all of them;
        an empty list gives a benign-only range.

    users : int, optional
        Interactive users. Defaults to one per 25,000 background events.
    """
    __slots__ = ["seed", "events", "days", "campaigns", "users"]

    def __init__(self, seed=None, events=None, days=None, campaigns=None,
                 users=None):
        self.seed = options["bench.seed"] if seed is None else int(seed)
        self.events = options["bench.events"] if events is None else int(events)
        self.days = options["bench.days"] if days is None else int(days)
        self.campaigns = _make_list(
            CAMPAIGNS if campaigns is None else campaigns)
        self.users = max(1, self.events // _EVENTS_PER_USER) \
            if users is None else int(users)
        unknown = [c for c in self.campaigns if c not in _TEMPLATES]
        if unknown:
            msg = "Unknown campaign(s) {}. Known campaigns are {}"
            raise ValueError(msg.format(unknown, CAMPAIGNS))
        if self.events < 0 or self.days < 1 or self.users < 1:
            msg = "events must be >= 0, days and users >= 1; got {}"
            raise ValueError(msg.format(self.as_dict()))

    def scaled(self, factor):
        """Same profile with ``factor`` times the events and users."""
        return ScenarioSpec(self.seed, int(self.events * factor), self.days,
                            self.campaigns, max(1, int(self.users * factor)))

    def as_dict(self):
        return {s: getattr(self, s) for s in self.__slots__}

    def __repr__(self):
        return "ScenarioSpec({})".format(self.as_dict())


class Scenario(object):
    """
    Attributes
    ----------
    events : list of AuditEvent
        Background and attack events in time order.

    labels : dict
        ``attack_events`` (indices into ``events``), ``attack_entities``
        (ids created by the attacks) and per-campaign ``events``,
        ``entities`` and ``tag``.

    queries : list of AttrGraph
        The injected attack subgraphs, one per campaign, labelled with the
        campaign name.
    """

    def __init__(self, spec, events, labels, queries):
        self.spec = spec
        self.events = events
        self.labels = labels
        self.queries = queries

    @property
    def attack_entities(self):
        return self.labels["attack_entities"]

    def campaign_events(self, name):
        return [self.events[i] for i in self.labels["campaigns"][name]["events"]]

    def __repr__(self):
        msg = "Scenario(events={}, attack_events={}, campaigns={})"
        return msg.format(len(self.events), len(self.labels["attack_events"]),
                          list(self.labels["campaigns"]))


class _World(object):
    """Entity population and event emitter."""

    def __init__(self, spec, rng):
        self.rng = rng
        self.n_procs = 0
        self.n_fresh = 0
        self.events = []
        self.working_sets = {}
        u = spec.users
        self.libs = ["/usr/lib/x86_64-linux-gnu/libmod{}.so".format(k)
                     for k in range(40)]
        self.cfgs = ["/etc/app{}.conf".format(k) for k in range(25)]
        self.www = ["/var/www/html/page{}.html".format(k) for k in range(30)]
        self.mime = ["/usr/share/mime/cache{}".format(k) for k in range(10)]
        self.cdn = ["151.101.{}.{}".format(k // 200, k % 200 + 1)
                    for k in range(30 * u)]
        self.git = ["140.82.112.{}".format(k + 3) for k in range(4)]
        self.proxy = "10.0.1.2"
        self.bastion = "10.0.0.2"

        self.systemd = self.proc("systemd")
        self.cron = self.proc("cron")
        self.sshd = self.proc("sshd")
        self.nginx = self.proc("nginx")
        self.rsyslogd = self.proc("rsyslogd")
        self.bash = [self.proc("bash") for _ in range(u)]
        self.firefox = [self.proc("firefox") for _ in range(u)]

    def proc(self, name, tag=None):
        self.n_procs += 1
        if tag is None:
            return ("proc:{}".format(self.n_procs), name)
        return ("proc:{}:{}".format(tag, self.n_procs), name)

    def pick(self, items):
        return items[self.rng.integers(len(items))]

    def fresh(self, pattern):
        self.n_fresh += 1
        return pattern.format(self.n_fresh)

    def working(self, key, pattern, size, churn):
        """Member of a rolling working set; new members push out the oldest."""
        items = self.working_sets.get(key)
        if items is None:
            items = self.working_sets[key] = collections.deque(maxlen=size)
        if len(items) < size or self.rng.random() < churn:
            items.append(self.fresh(pattern))
            return items[-1]
        return items[self.rng.integers(len(items))]

    def doc(self, u):
        pattern = "/home/user{}/docs/report{{}}.txt".format(u)
        return self.working(("doc", u), pattern, 6, 0.1)

    def src(self, u):
        pattern = "/home/user{}/src/mod{{}}.c".format(u)
        return self.working(("src", u), pattern, 5, 0.15)

    def cache(self, u):
        pattern = "/home/user{}/.cache/firefox/entry{{}}".format(u)
        return self.working(("cache", u), pattern, 8, 0.4)

    def file(self, ts, p, op, path, ident=None):
        self.events.append(AuditEvent(ts, p[0], p[1], ident or "file:" + path,
                                      path, EntityKind.FILE, op,
                                      op.default_dir))

    def net(self, ts, p, op, addr, port=443, ident=None):
        name = "{}:{}".format(addr, port)
        self.events.append(AuditEvent(ts, p[0], p[1],
                                      ident or "net:" + name, name,
                                      EntityKind.NETFLOW, op, op.default_dir,
                                      addr))

    def fork(self, ts, p, child):
        self.events.append(AuditEvent(ts, p[0], p[1], child[0], child[1],
                                      EntityKind.PROCESS, EdgeOp.FORK,
                                      EdgeOp.FORK.default_dir))

    def modify_proc(self, ts, p, target):
        self.events.append(AuditEvent(ts, p[0], p[1], target[0], target[1],
                                      EntityKind.PROCESS, EdgeOp.MODIFY,
                                      EdgeOp.MODIFY.default_dir))

    # -- benign behaviours, each a short burst starting at ts --
    # short-lived processes touch recent or fresh entities; pooled entities
    # are shared by the long-running ones

    def browse(self, ts, u):
        ff = self.firefox[u]
        self.net(ts, ff, EdgeOp.RECV, self.pick(self.cdn))
        if self.rng.random() < 0.7:
            self.file(ts + 1, ff, EdgeOp.WRITE, self.cache(u))
        if self.rng.random() < 0.2:
            self.file(ts + 2, ff, EdgeOp.READ, self.cache(u))
        if self.rng.random() < 0.1:
            self.file(ts + 3, ff, EdgeOp.LOAD, self.pick(self.libs))

    def shell(self, ts, u):
        tool = self.proc(self.pick(["ls", "cat", "grep"]))
        self.fork(ts, self.bash[u], tool)
        for k in range(int(self.rng.integers(2, 5))):
            self.file(ts + 1 + k, tool, EdgeOp.READ, self.doc(u))
        if self.rng.random() < 0.1:
            self.file(ts + 6, tool, EdgeOp.WRITE, self.fresh("/tmp/tmp{}"))

    def dev(self, ts, u):
        if self.rng.random() < 0.5:
            vim = self.proc("vim")
            self.fork(ts, self.bash[u], vim)
            src = self.src(u)
            self.file(ts + 1, vim, EdgeOp.READ, src)
            self.file(ts + 2, vim, EdgeOp.WRITE, src)
            return
        gcc = self.proc("gcc")
        self.fork(ts, self.bash[u], gcc)
        for k in range(int(self.rng.integers(2, 5))):
            self.file(ts + 1 + k, gcc, EdgeOp.READ, self.src(u))
        self.file(ts + 5, gcc, EdgeOp.WRITE, self.fresh("/tmp/cc{}.o"))

    def daemon(self, ts, u):
        r = self.rng.random()
        if r < 0.35:
            self.net(ts, self.nginx, EdgeOp.RECV, self.proxy, 80)
            self.file(ts + 1, self.nginx, EdgeOp.READ, self.pick(self.www))
            self.net(ts + 2, self.nginx, EdgeOp.SEND, self.proxy, 80)
        elif r < 0.6:
            self.net(ts, self.sshd, EdgeOp.RECV, self.bastion, 22)
            self.net(ts + 1, self.sshd, EdgeOp.SEND, self.bastion, 22)
        elif r < 0.8:
            sh = self.proc("sh")
            self.fork(ts, self.cron, sh)
            self.file(ts + 1, sh, EdgeOp.READ, self.doc(u))
            self.file(ts + 2, sh, EdgeOp.WRITE,
                      self.fresh("/var/backups/user{}-{{}}.tar".format(u)))
            if self.rng.random() < 0.3:
                self.file(ts + 3, sh, EdgeOp.LOAD, self.fresh("/tmp/job{}.sh"))
        else:
            sd = self.systemd
            self.file(ts, sd, EdgeOp.READ, self.pick(self.cfgs))
            self.file(ts + 1, sd, EdgeOp.LOAD, self.pick(self.libs))
            if self.rng.random() < 0.3:
                self.file(ts + 2, sd, EdgeOp.WRITE, self.pick(self.mime))
            if self.rng.random() < 0.1:
                self.modify_proc(ts + 3, sd, self.rsyslogd)
            if self.rng.random() < 0.1:
                self.file(ts + 4, sd, EdgeOp.MODIFY, self.pick(self.cfgs))

    def sync(self, ts, u):
        git = self.proc("git")
        self.fork(ts, self.bash[u], git)
        for k in range(int(self.rng.integers(2, 5))):
            self.file(ts + 1 + k, git, EdgeOp.READ, self.src(u))
        host = self.pick(self.git)
        sock = self.fresh("net:{}:443:{{}}".format(host))
        self.net(ts + 5, git, EdgeOp.CONNECT, host, ident=sock)
        self.net(ts + 6, git, EdgeOp.SEND, host, ident=sock)


def _startup(w, ts):
    for p in (w.cron, w.sshd, w.nginx, w.rsyslogd):
        w.fork(ts, w.systemd, p)
    for u in range(len(w.bash)):
        w.fork(ts + 1, w.sshd, w.bash[u])
        w.fork(ts + 2, w.bash[u], w.firefox[u])


def _background(spec, w):
    # bursts are emitted at offset 0 in time order, then placed on sorted
    # start times so first sight of an entity follows the clock
    span = spec.days * DAY_MS
    _startup(w, ORIGIN_MS)
    names = [b for (b, _) in _BEHAVIOURS]
    weights = np.array([p for (_, p) in _BEHAVIOURS])
    weights /= weights.sum()
    starts = []
    while len(w.events) < spec.events:
        starts.append(len(w.events))
        u = int(w.rng.integers(spec.users))
        getattr(w, names[w.rng.choice(len(names), p=weights)])(0, u)
    del w.events[spec.events:]

    bases = np.sort(w.rng.integers(1000, span - 60000, size=len(starts)))
    bounds = starts[1:] + [len(w.events)]
    for (base, start, stop) in zip(bases, starts, bounds):
        for i in range(start, stop):
            e = w.events[i]
            w.events[i] = e._replace(ts=ORIGIN_MS + int(base) + e.ts)


# -- attack templates: (world, start ts, tag) -> None, appending events --

def _upgrade_hijack(w, ts, tag):
    rng = w.rng
    payload = str(rng.choice(["gupdate", "svc-helper", "dbus-launch2"]))
    c2 = "203.0.113.{}".format(rng.integers(2, 250))
    gup = w.proc("gup", tag)
    bin_path = "/tmp/{}.bin".format(payload)
    bin_id = "file:{}:{}".format(tag, bin_path)
    c2_id = "net:{}:{}:443".format(tag, c2)
    w.fork(ts, w.bash[0], gup)
    w.net(ts + 1000, gup, EdgeOp.RECV, c2, ident=c2_id)
    w.file(ts + 2000, gup, EdgeOp.WRITE, bin_path, ident=bin_id)
    p = w.proc(payload, tag)
    w.fork(ts + 3000, gup, p)
    w.file(ts + 4000, p, EdgeOp.LOAD, bin_path, ident=bin_id)
    w.net(ts + 5000, p, EdgeOp.CONNECT, c2, ident=c2_id)
    w.net(ts + 6000, p, EdgeOp.SEND, c2, ident=c2_id)
    w.file(ts + 7000, p, EdgeOp.READ, "/etc/shadow")
    w.file(ts + 8000, p, EdgeOp.READ, "/home/user0/.ssh/id_rsa")
    stash = "/tmp/.cache-{}".format(rng.integers(1000, 9999))
    w.file(ts + 9000, p, EdgeOp.WRITE, stash, ident="file:{}:{}".format(
        tag, stash))
    w.net(ts + 10000, p, EdgeOp.SEND, c2, ident=c2_id)


def _shell_recon_exfil(w, ts, tag):
    rng = w.rng
    attacker = "198.51.100.{}".format(rng.integers(2, 250))
    drop = "45.33.{}.{}".format(rng.integers(1, 250), rng.integers(2, 250))
    w.net(ts, w.nginx, EdgeOp.RECV, attacker, 80,
          ident="net:{}:{}:80".format(tag, attacker))
    sh = w.proc("sh", tag)
    w.fork(ts + 1000, w.nginx, sh)
    for (k, tool) in enumerate(["whoami", "uname"]):
        w.fork(ts + 2000 + k * 500, sh, w.proc(tool, tag))
    cat = w.proc("cat", tag)
    w.fork(ts + 3000, sh, cat)
    w.file(ts + 3500, cat, EdgeOp.READ, "/etc/group")
    w.file(ts + 4000, cat, EdgeOp.READ, "/etc/passwd")
    tar = w.proc("tar", tag)
    archive = "/tmp/{}.tgz".format(rng.choice(["bk", "logs", "site"]))
    archive_id = "file:{}:{}".format(tag, archive)
    w.fork(ts + 5000, sh, tar)
    w.file(ts + 5500, tar, EdgeOp.READ, "/var/www/html/config.php")
    w.file(ts + 6000, tar, EdgeOp.READ, "/var/www/html/db.sql")
    w.file(ts + 6500, tar, EdgeOp.WRITE, archive, ident=archive_id)
    curl = w.proc("curl", tag)
    drop_id = "net:{}:{}:443".format(tag, drop)
    w.fork(ts + 7000, sh, curl)
    w.file(ts + 7500, curl, EdgeOp.READ, archive, ident=archive_id)
    w.net(ts + 8000, curl, EdgeOp.CONNECT, drop, ident=drop_id)
    w.net(ts + 8500, curl, EdgeOp.SEND, drop, ident=drop_id)


def _credential_theft(w, ts, tag):
    rng = w.rng
    attacker = "192.0.2.{}".format(rng.integers(2, 250))
    attacker_id = "net:{}:{}:22".format(tag, attacker)
    w.net(ts, w.sshd, EdgeOp.RECV, attacker, 22, ident=attacker_id)
    bash = w.proc("bash", tag)
    w.fork(ts + 1000, w.sshd, bash)
    py = w.proc("python3", tag)
    w.fork(ts + 2000, bash, py)
    w.file(ts + 3000, py, EdgeOp.READ, "/etc/shadow")
    hashes = "/tmp/h{}.txt".format(rng.integers(10, 99))
    hashes_id = "file:{}:{}".format(tag, hashes)
    w.file(ts + 4000, py, EdgeOp.WRITE, hashes, ident=hashes_id)
    w.file(ts + 5000, bash, EdgeOp.WRITE, "/etc/crontab")
    nc = w.proc("nc", tag)
    w.fork(ts + 6000, bash, nc)
    w.file(ts + 7000, nc, EdgeOp.READ, hashes, ident=hashes_id)
    w.net(ts + 8000, nc, EdgeOp.SEND, attacker, 22, ident=attacker_id)


_TEMPLATES = {
    "upgrade_hijack": _upgrade_hijack,
    "shell_recon_exfil": _shell_recon_exfil,
    "credential_theft": _credential_theft,
}


def query_graph(events, label, rules=None):
    """
    Attributed graph of an event set, nodes folded by normalized name and
    abstract type, edges along the information flow
    """
    g = AttrGraph(label)
    by_key = {}

    def node(kind, name, addr=None):
        abs_type = abstract_node(kind, name, addr, rules)
        key = (normalize_name(kind, addr or name), abs_type)
        if key not in by_key:
            by_key[key] = g.add_node(name, abs_type)
        return by_key[key]

    for e in events:
        s = node(EntityKind.PROCESS, e.sbj_name)
        o = node(e.obj_kind, e.obj_name, e.obj_addr)
        if e.dir is EventDir.SBJ_TO_OBJ:
            g.add_edge(s, o, e.op.canonical, e.ts)
        else:
            g.add_edge(o, s, e.op.canonical, e.ts)
    return g


def generate(spec=None):
    """
    Build a labelled range

    Deterministic for a given spec. Campaign ``i`` of ``n`` starts at
    ``(i + 1) / (n + 1)`` of the time span; entities an attack creates carry
    an id of the form ``kind:c<i>:...``.

    Returns
    -------
    scenario : Scenario
    """
    spec = ScenarioSpec() if spec is None else spec
    rng = np.random.default_rng(spec.seed)
    w = _World(spec, rng)
    _background(spec, w)
    n_benign = len(w.events)

    campaigns = collections.OrderedDict()
    span = spec.days * DAY_MS
    for (i, name) in enumerate(spec.campaigns):
        tag = "c{}".format(i)
        start = len(w.events)
        ts = ORIGIN_MS + int(span * (i + 1) / (len(spec.campaigns) + 1))
        _TEMPLATES[name](w, ts, tag)
        campaigns[name] = (tag, start, len(w.events))

    order = sorted(range(len(w.events)), key=lambda i: (w.events[i].ts, i))
    position = {old: new for (new, old) in enumerate(order)}
    events = [w.events[i] for i in order]

    labels = {"attack_events": sorted(position[i] for i in
                                      range(n_benign, len(order))),
              "campaigns": collections.OrderedDict()}
    attack_entities = set()
    queries = []
    for (name, (tag, start, stop)) in campaigns.items():
        idx = sorted(position[i] for i in range(start, stop))
        evs = [events[i] for i in idx]
        entities = sorted({e.sbj_id for e in evs} | {e.obj_id for e in evs})
        created = [x for x in entities if ":{}:".format(tag) in x]
        attack_entities.update(created)
        labels["campaigns"][name] = {"tag": tag, "events": idx,
                                     "entities": entities, "created": created}
        queries.append(query_graph(evs, name))
    labels["attack_entities"] = sorted(attack_entities)

    LOGGER.info("generated {} events ({} attack) across {} campaigns".format(
        len(events), len(labels["attack_events"]), len(campaigns)))
    return Scenario(spec, events, labels, queries)


def write_scenario(scenario, outdir):
    """
    Write ``events.jsonl``, ``labels.json`` and ``queries/<campaign>.json``

    Returns
    -------
    paths : dict
    """
    _ensure_dir(outdir)
    events_fn = os.path.join(outdir, "events.jsonl")
    labels_fn = os.path.join(outdir, "labels.json")
    qdir = os.path.join(outdir, "queries")
    write_events(scenario.events, events_fn)
    payload = dict(scenario.labels)
    payload["spec"] = scenario.spec.as_dict()
    write_json(labels_fn, payload)
    _ensure_dir(qdir)
    for q in scenario.queries:
        save_graph(q, os.path.join(qdir, q.label + ".json"))
    return {"events": events_fn, "labels": labels_fn, "queries": qdir}
