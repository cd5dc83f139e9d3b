"""Distributed executor: one master, worker processes, shared work dir.

Wire protocol: one UTF-8 line per message, four tab-separated fields

    TYPE <tab> task_id <tab> attempt <tab> payload_path

with "-" for unused fields. Types: REGISTER (worker -> master, payload
field carries the worker name), HEARTBEAT (worker -> master), ASSIGN
(master -> worker, payload file holds the task description), RESULT
(worker -> master, payload file holds status and output paths), SHUTDOWN
(master -> worker). Task payloads and results travel through the shared
work directory; the socket only carries control lines.

The master is a single-threaded state machine over an event queue fed by
per-connection reader threads and a timer. A worker whose heartbeats go
stale past task_timeout_ms loses its in-flight task to a fresh attempt;
results from superseded attempts are discarded.
"""

import json
import os
import queue
import socket
import subprocess
import sys
import threading
import time
from collections import deque
from dataclasses import dataclass

from szpred.errors import JobError, ParameterError, StartupError
from szpred.mapreduce import core


@dataclass(frozen=True)
class ClusterConfig:
    master_host: str = "127.0.0.1"
    master_port: int = 0  # 0 = ephemeral
    expected_workers: int = 2
    heartbeat_interval_ms: int = 200
    task_timeout_ms: int = 4000
    work_dir: str = "."
    startup_timeout_s: float = 20.0

    def __post_init__(self):
        if not self.task_timeout_ms > self.heartbeat_interval_ms > 0:
            raise ParameterError(
                f"need task_timeout_ms > heartbeat_interval_ms > 0, got "
                f"{self.task_timeout_ms} / {self.heartbeat_interval_ms}"
            )
        if self.expected_workers < 1:
            raise ParameterError("expected_workers must be >= 1")


def _send_line(sock, lock, msg_type, task_id="-", attempt="-", payload="-"):
    line = f"{msg_type}\t{task_id}\t{attempt}\t{payload}\n".encode("utf-8")
    with lock:
        sock.sendall(line)


class _WorkerConn:
    _next_id = 0

    def __init__(self, conn):
        self.conn = conn
        self.lock = threading.Lock()
        self.wid = _WorkerConn._next_id
        _WorkerConn._next_id += 1
        self.name = f"worker-{self.wid}"
        self.last_seen = time.monotonic()
        self.inflight = None  # task_id or None
        self.alive = True

    def send(self, *fields):
        try:
            _send_line(self.conn, self.lock, *fields)
        except OSError:
            self.alive = False


class Master:
    """Hosts the listening socket and schedules one job at a time."""

    def __init__(self, cluster):
        self.cluster = cluster
        self.events = queue.Queue()
        self.workers = {}
        self.result_log = []  # (task_id, attempt, accepted) accounting
        self._listener = None
        self._stop = threading.Event()
        self.address = None

    # -- lifecycle --

    def start(self):
        self._listener = socket.create_server(
            (self.cluster.master_host, self.cluster.master_port)
        )
        self.address = self._listener.getsockname()[:2]
        threading.Thread(target=self._accept_loop, daemon=True).start()
        threading.Thread(target=self._tick_loop, daemon=True).start()
        return self.address

    def close(self):
        self._stop.set()
        for w in list(self.workers.values()):
            if w.alive:
                w.send("SHUTDOWN")
        for w in list(self.workers.values()):
            try:
                w.conn.close()
            except OSError:
                pass
        if self._listener is not None:
            self._listener.close()

    # -- network feeds --

    def _accept_loop(self):
        while not self._stop.is_set():
            try:
                conn, _addr = self._listener.accept()
            except OSError:
                return
            worker = _WorkerConn(conn)
            threading.Thread(target=self._read_loop, args=(worker,), daemon=True).start()

    def _read_loop(self, worker):
        try:
            fh = worker.conn.makefile("r", encoding="utf-8", newline="\n")
            for line in fh:
                parts = line.rstrip("\n").split("\t")
                if len(parts) != 4:
                    continue  # tolerate garbage; the scheduler never blocks on it
                self.events.put(("line", worker, parts))
        except OSError:
            pass
        finally:
            self.events.put(("gone", worker))

    def _tick_loop(self):
        interval = max(0.05, self.cluster.heartbeat_interval_ms / 2000.0)
        while not self._stop.is_set():
            time.sleep(interval)
            self.events.put(("tick",))

    # -- scheduling --

    def _alive(self):
        return [w for w in self.workers.values() if w.alive]

    def wait_for_workers(self):
        """Block until the expected workers registered; StartupError if none
        showed up by the deadline, proceed degraded if at least one did."""
        deadline = time.monotonic() + self.cluster.startup_timeout_s
        while len(self._alive()) < self.cluster.expected_workers:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                break
            try:
                event = self.events.get(timeout=min(remaining, 0.1))
            except queue.Empty:
                continue
            self._handle_admin(event)
        if not self._alive():
            raise StartupError(
                f"no workers registered within {self.cluster.startup_timeout_s}s"
            )
        return len(self._alive())

    def _handle_admin(self, event):
        """Registration/heartbeat handling shared by all loop phases."""
        kind = event[0]
        if kind == "line":
            _, worker, (msg_type, task_id, attempt, payload) = event
            worker.last_seen = time.monotonic()
            if msg_type == "REGISTER":
                worker.name = payload
                self.workers[worker.wid] = worker
            return (worker, msg_type, task_id, attempt, payload)
        if kind == "gone":
            event[1].alive = False
        return None

    def run_job(self, job):
        """Schedule map then reduce tasks; returns the collected records."""
        n_partitions = max(1, len(self._alive()))
        all_splits = list(range(len(job.input_splits)))
        map_tasks = [
            core.TaskSpec(
                task_id=core.map_task_id(i),
                kind="map",
                job_id=job.job_id,
                payload={"split_index": i, "n_partitions": n_partitions},
            )
            for i in all_splits
        ]
        self._run_phase(job, map_tasks)
        reduce_tasks = [
            core.TaskSpec(
                task_id=core.reduce_task_id(p),
                kind="reduce",
                job_id=job.job_id,
                payload={"partition": p, "map_split_indices": all_splits},
            )
            for p in range(n_partitions)
        ]
        self._run_phase(job, reduce_tasks)
        return core.collect_output(job, n_partitions, work_dir=self.cluster.work_dir)

    def _run_phase(self, job, tasks):
        pending = deque(tasks)
        current_attempt = {t.task_id: t.attempt for t in tasks}
        running = {}  # task_id -> worker
        done = set()
        failures = {}
        timeout_s = self.cluster.task_timeout_ms / 1000.0

        def requeue(worker):
            worker.alive = False
            worker_task = worker.inflight
            worker.inflight = None
            if worker_task is not None and worker_task not in done:
                running.pop(worker_task, None)
                spec = next(t for t in tasks if t.task_id == worker_task)
                attempt = current_attempt[worker_task] + 1
                current_attempt[worker_task] = attempt
                pending.append(spec)

        while len(done) < len(tasks):
            # hand tasks to idle workers
            for worker in self._alive():
                if not pending:
                    break
                if worker.inflight is None:
                    spec = pending.popleft()
                    attempt = current_attempt[spec.task_id]
                    payload_path = self._write_assignment(job, spec, attempt)
                    worker.inflight = spec.task_id
                    running[spec.task_id] = worker
                    worker.send("ASSIGN", spec.task_id, str(attempt), payload_path)
            if not self._alive() and len(done) < len(tasks):
                raise JobError("all workers lost; job cannot finish")
            try:
                event = self.events.get(timeout=0.5)
            except queue.Empty:
                continue
            msg = self._handle_admin(event)
            if event[0] == "gone":
                requeue(event[1])
                continue
            if event[0] == "tick":
                now = time.monotonic()
                for worker in self._alive():
                    if worker.inflight is not None and now - worker.last_seen > timeout_s:
                        requeue(worker)
                continue
            if msg is None:
                continue
            worker, msg_type, task_id, attempt_s, payload = msg
            if msg_type != "RESULT":
                continue
            attempt = int(attempt_s)
            accepted = (
                task_id in current_attempt
                and attempt == current_attempt[task_id]
                and task_id not in done
            )
            self.result_log.append((task_id, attempt, accepted))
            if worker.inflight == task_id:
                worker.inflight = None
            if not accepted:
                continue
            result = self._read_result(payload, task_id, attempt)
            running.pop(task_id, None)
            if result.status == "ok":
                done.add(task_id)
            else:
                failures[task_id] = failures.get(task_id, 0) + 1
                if failures[task_id] >= 3:
                    raise JobError(
                        f"task {task_id} failed {failures[task_id]} attempts: {result.error}"
                    )
                current_attempt[task_id] += 1
                pending.append(next(t for t in tasks if t.task_id == task_id))

    def _write_assignment(self, job, spec, attempt):
        path = os.path.join(
            self.cluster.work_dir, "control", f"{job.job_id}-{spec.task_id}-a{attempt}.json"
        )
        core.atomic_write(
            path,
            json.dumps(
                {
                    "job": json.loads(job.to_json()),
                    "kind": spec.kind,
                    "task_id": spec.task_id,
                    "attempt": attempt,
                    "payload": spec.payload,
                }
            ),
        )
        return path

    def _read_result(self, payload_path, task_id, attempt):
        try:
            with open(payload_path, "r", encoding="utf-8") as fh:
                d = json.load(fh)
            return core.TaskResult(
                task_id=task_id,
                attempt=attempt,
                outputs=tuple(d.get("outputs", ())),
                status=d["status"],
                error=d.get("error", ""),
            )
        except (OSError, ValueError, KeyError) as exc:
            return core.TaskResult(
                task_id=task_id, attempt=attempt, outputs=(), status="error", error=str(exc)
            )


def run_worker(
    master_host,
    master_port,
    work_dir,
    name=None,
    heartbeat_interval_ms=200,
    fault_exit_after=None,
):
    """Worker loop: register, heartbeat, execute assignments until SHUTDOWN.

    fault_exit_after (test hook, also settable via SZPRED_EXIT_AFTER_TASKS):
    hard-exit after completing that many tasks, before reporting the last
    one, forcing the master down the re-execution path.
    """
    # production jobs register on import so assignments can resolve fn ids
    import szpred.mapreduce.jobs  # noqa: F401

    if fault_exit_after is None and os.environ.get("SZPRED_EXIT_AFTER_TASKS"):
        fault_exit_after = int(os.environ["SZPRED_EXIT_AFTER_TASKS"])
    name = name or f"pid-{os.getpid()}"
    sock = socket.create_connection((master_host, master_port))
    lock = threading.Lock()
    _send_line(sock, lock, "REGISTER", payload=name)
    stop = threading.Event()

    def heartbeat():
        while not stop.is_set():
            time.sleep(heartbeat_interval_ms / 1000.0)
            try:
                _send_line(sock, lock, "HEARTBEAT")
            except OSError:
                return

    threading.Thread(target=heartbeat, daemon=True).start()
    completed = 0
    fh = sock.makefile("r", encoding="utf-8", newline="\n")
    try:
        for line in fh:
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 4:
                continue
            msg_type, task_id, attempt, payload_path = parts
            if msg_type == "SHUTDOWN":
                return 0
            if msg_type != "ASSIGN":
                continue
            with open(payload_path, "r", encoding="utf-8") as pfh:
                assignment = json.load(pfh)
            job = core.Job.from_json(json.dumps(assignment["job"]))
            try:
                if assignment["kind"] == "map":
                    outputs = core.run_map_task(
                        job,
                        assignment["payload"]["split_index"],
                        assignment["payload"]["n_partitions"],
                        work_dir,
                    )
                else:
                    outputs = core.run_reduce_task(
                        job,
                        assignment["payload"]["partition"],
                        assignment["payload"]["map_split_indices"],
                        work_dir,
                    )
                result = {"status": "ok", "outputs": list(outputs)}
            except Exception as exc:  # reported to the master, not raised
                result = {"status": "error", "error": f"{type(exc).__name__}: {exc}"}
            completed += 1
            if fault_exit_after is not None and completed >= fault_exit_after:
                os._exit(17)
            result_path = f"{payload_path[:-5]}-result.json"
            core.atomic_write(result_path, json.dumps(result))
            _send_line(sock, lock, "RESULT", task_id, attempt, result_path)
    finally:
        stop.set()
        sock.close()
    return 0


def spawn_local_workers(address, work_dir, count, env_extra=None):
    """Start worker subprocesses against a master address (test/CLI helper)."""
    host, port = address
    procs = []
    for _ in range(count):
        env = dict(os.environ)
        if env_extra:
            env.update(env_extra)
        procs.append(
            subprocess.Popen(
                [
                    sys.executable,
                    "-m",
                    "szpred",
                    "worker",
                    "--master",
                    f"{host}:{port}",
                    "--work-dir",
                    work_dir,
                ],
                env=env,
            )
        )
    return procs


def run_distributed(job, cluster, spawn_workers=0, worker_env=None):
    """Run a job on a master started in-process.

    With spawn_workers > 0, that many local worker subprocesses are
    launched once the master socket is bound; otherwise workers are
    expected to join from outside (CLI `worker` subcommand).
    """
    master = Master(cluster)
    address = master.start()
    procs = []
    try:
        if spawn_workers:
            procs = spawn_local_workers(address, cluster.work_dir, spawn_workers, worker_env)
        master.wait_for_workers()
        return master.run_job(job)
    finally:
        master.close()
        for proc in procs:
            try:
                proc.wait(timeout=10)
            except subprocess.TimeoutExpired:
                proc.kill()
