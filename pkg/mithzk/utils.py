#!python
"""This module provides the plumbing shared by all mithzk modules.

    - logging of proof, session, selftest and bench runs
    - a thread pool for independent experiment trials
    - json presets shipped in the "lib" folder
    - the length-prefixed binary encoding of views, proofs and frames
"""

# builtin
import logging
import os
import sys
import json
import struct
# local
import mithzk


BASE_PATH = os.path.dirname(__file__)
LIB_PATH = os.path.join(BASE_PATH, "lib")
LOG_PATH = os.path.join(BASE_PATH, "logs")
CIRCUIT_PATH = os.path.join(LIB_PATH, "circuits")
GOLDEN_CIRCUIT_PATH = os.path.join(CIRCUIT_PATH, "golden")
BENCH_CIRCUIT_PATH = os.path.join(CIRCUIT_PATH, "bench")
MAX_THREADS = 1
PROGRESS_CALLBACK = True


def set_logger(
    *,
    log_file_name="",
    stream: bool = True,
    log_level: int = logging.INFO,
    overwrite: bool = False,
) -> str:
    """Route the root logger of a mithzk command to stdout and a file.

    Existing handlers of the root logger are removed first.

    Parameters
    ----------
    log_file_name : str, None
        The log file or a folder for it, relative to the current path.
        Missing folders are created.
        A folder (or "" for the mithzk "logs" folder) gets a file named
        "log_yyyymmddhhmmss.txt" after the start of the run.
        If None, nothing is written to disk.
        Default is "".
    stream : bool
        If True, records are also written to stdout. The prover, verifier
        and selftest commands print their results separately, so this can
        be disabled without losing output.
        Default is True.
    log_level : int
        The level of the root logger and both handlers.
        Default is logging.INFO.
    overwrite : bool
        If True, an existing log file is truncated, otherwise appended to.
        Default is False.

    Returns
    -------
    : str
        The absolute log file name, or None without a file.
    """
    import time
    root = logging.getLogger()
    formatter = logging.Formatter(
        '%(asctime)s> %(message)s', "%Y-%m-%d %H:%M:%S"
    )
    root.setLevel(log_level)
    while root.hasHandlers():
        root.removeHandler(root.handlers[0])
    if stream:
        stream_handler = logging.StreamHandler(sys.stdout)
        stream_handler.setLevel(log_level)
        stream_handler.setFormatter(formatter)
        root.addHandler(stream_handler)
    if log_file_name is None:
        return None
    if log_file_name == "":
        log_file_name = LOG_PATH
    log_file_name = os.path.abspath(log_file_name)
    if os.path.isdir(log_file_name) or log_file_name == LOG_PATH:
        log_file_name = os.path.join(
            log_file_name,
            f"log_{time.strftime('%Y%m%d%H%M%S')}.txt"
        )
    os.makedirs(os.path.dirname(log_file_name), exist_ok=True)
    file_handler = logging.FileHandler(
        log_file_name,
        mode="w" if overwrite else "a"
    )
    file_handler.setLevel(log_level)
    file_handler.setFormatter(formatter)
    root.addHandler(file_handler)
    return log_file_name


def show_platform_info() -> None:
    """Log the host a command runs on.

    Bench timings and selftest durations depend on it, so it is logged
    before every command as:

        - [timestamp]> Host information:
        - [timestamp]> system    - [...]
        - [timestamp]> machine   - [...]
        - [timestamp]> cpu count - [...] ([...] trial threads)
        - [timestamp]> ram       - [...]/[...] Gb (available/total)
        - [timestamp]> openssl   - [...] (HMAC-SHA256 commitments)
    """
    import platform
    import ssl
    import psutil
    memory = psutil.virtual_memory()
    if platform.system() == "Darwin":
        version = platform.mac_ver()[0]
    else:
        version = platform.release()
    logging.info("Host information:")
    logging.info(f"system    - {platform.system()} {version}")
    logging.info(f"machine   - {platform.machine()} {platform.processor()}")
    logging.info(
        f"cpu count - {psutil.cpu_count()} ({MAX_THREADS} trial threads)"
    )
    logging.info(
        f"ram       - {memory.available/1024**3:.1f}/"
        f"{memory.total/1024**3:.1f} Gb (available/total)"
    )
    logging.info(f"openssl   - {ssl.OPENSSL_VERSION} (HMAC-SHA256 commitments)")
    logging.info("")


def show_python_info() -> None:
    """Log the versions of Python, mithzk and its runtime requirements.

    Development requirements are skipped. The format is:

        - [timestamp]> Python information:
        - [timestamp]> mithzk             - [current_version]
        - [timestamp]> [required package] - [current_version]
        - ...
        - [timestamp]> [required package] - [current_version]
    """
    import importlib.metadata
    import platform
    module_versions = {
        "python": platform.python_version(),
        "mithzk": mithzk.__version__
    }
    try:
        requirements = importlib.metadata.requires("mithzk")
    except importlib.metadata.PackageNotFoundError:
        requirements = None
    if requirements is None:
        # source checkout without installed metadata
        requirements = []
        requirement_file_name = os.path.join(
            BASE_PATH, "..", "requirements", "requirements.txt"
        )
        if os.path.exists(requirement_file_name):
            with open(requirement_file_name) as requirements_file:
                requirements = [
                    line.strip() for line in requirements_file if line.strip()
                ]
    for requirement in requirements:
        parts = requirement.split(";")
        if len(parts) > 1:
            if "development" in parts[1]:
                continue
        module_name = parts[0].split("=")[0].split()[0]
        try:
            module_version = importlib.metadata.version(module_name)
        except importlib.metadata.PackageNotFoundError:
            module_version = ""
        module_versions[module_name] = module_version
    max_len = max(len(key) for key in module_versions)
    logging.info("Python information:")
    for key, value in sorted(module_versions.items()):
        logging.info(f"{key:<{max_len}} - {value}")
    logging.info("")


def save_parameters(parameter_file_name: str, paramaters: dict) -> None:
    """Save parameters to a parameter file.

    IMPORTANT NOTE: This overwrites any existing file.

    Parameters
    ----------
    parameter_file_name : str
        The file name to where the parameters are written.
    paramaters : dict
        A dictionary with parameters.
    """
    logging.info(f"Saving parameters to {parameter_file_name}")
    with open(parameter_file_name, "w") as outfile:
        json.dump(paramaters, outfile, indent=4, sort_keys=True)


def load_parameters(parameter_file_name: str) -> dict:
    """Load a parameter dict from a file.

    Parameters
    ----------
    parameter_file_name : str
        A file name that contains parameters in .json format.

    Returns
    -------
    : dict
        A dict with parameters.
    """
    with open(parameter_file_name, "r") as infile:
        return json.load(infile)


def load_lib_json(file_name: str) -> dict:
    """Load a .json file that is shipped in the mithzk "lib" folder."""
    return load_parameters(os.path.join(LIB_PATH, file_name))


def set_threads(threads: int, set_global: bool = True) -> int:
    """Parse and set the (global) number of threads.

    Parameters
    ----------
    threads : int
        The number of threads.
        If larger than available cores, it is trimmed to the available maximum.
        If 0, it is set to the maximum cores available.
        If negative, it indicates how many cores NOT to use.
    set_global : bool
        If False, the number of threads is only parsed to a valid value.
        If True, the number of threads is saved as a global variable.
        Default is True.

    Returns
    -------
    : int
        The number of threads.
    """
    import multiprocessing
    max_cpu_count = multiprocessing.cpu_count()
    if threads > max_cpu_count:
        threads = max_cpu_count
    else:
        while threads <= 0:
            threads += max_cpu_count
    if set_global:
        global MAX_THREADS
        MAX_THREADS = threads
    return threads


def threadpool(
    _func=None,
    *,
    thread_count=None,
    include_progress_callback: bool = True,
    return_results: bool = False,
) -> None:
    """A decorator that maps a function over work items on a thread pool.

    The harness uses it for independent trials, each with its own child
    RandomSource, so results do not depend on the thread count.
    The decorated function takes one work item as first argument. Called
    with a sized iterable, it runs once per item; called with a single
    item, it runs once in the calling thread.

    Parameters
    ----------
    _func : callable, None
        The function to decorate.
    thread_count : int, None
        The number of threads to use.
        This is always parsed with mithzk.utils.set_threads.
        Not possible as positional arguments,
        it always needs to be an explicit keyword argument.
        Default is None.
    include_progress_callback : bool
        If True, finished items are reported to the global progress
        callback (see `set_progress_callback`).
        Default is True.
    return_results : bool
        If True, the results are returned in the order of the work items.
        A single item always returns its result.
        Default is False.

    Returns
    -------
    : function
        The decorated function.
    """
    import multiprocessing.pool
    import functools

    def decorate(func):
        def wrapper(items, *args, **kwargs):
            def run_item(item):
                return func(item, *args, **kwargs)

            try:
                iter(items)
            except TypeError:
                return run_item(items)
            if thread_count is None:
                current_thread_count = MAX_THREADS
            else:
                current_thread_count = set_threads(
                    thread_count,
                    set_global=False
                )
            with multiprocessing.pool.ThreadPool(current_thread_count) as pool:
                if return_results:
                    results = []
                    for result in progress_callback(
                        pool.imap(run_item, items),
                        total=len(items),
                        include_progress_callback=include_progress_callback
                    ):
                        results.append(result)
                    return results
                else:
                    for result in progress_callback(
                        pool.imap_unordered(run_item, items),
                        total=len(items),
                        include_progress_callback=include_progress_callback
                    ):
                        pass
        return functools.wraps(func)(wrapper)
    if _func is None:
        return decorate
    return decorate(_func)


def progress_callback(
    iterable,
    include_progress_callback: bool = True,
    total: int = -1
):
    """Yield the elements of iterable and report how many were consumed.

    Selftest trials and bench circuits are reported this way, either as a
    tqdm bar or through an object with `max` and `value` attributes.

    Parameters
    ----------
    iterable
        The finished work items.
    include_progress_callback : bool
        If False, the global callback is ignored.
        Default is True.
    total : int
        The number of items, or -1 to use len(iterable).
        Default is -1.

    Returns
    -------
    : iterable
        A generator over iterable.
    """
    if include_progress_callback:
        current_progress_callback = PROGRESS_CALLBACK
    else:
        current_progress_callback = None
    if total == -1:
        total = len(iterable)
    if current_progress_callback is None:
        for element in iterable:
            yield element
    elif isinstance(
        current_progress_callback,
        bool
    ) and current_progress_callback:
        import tqdm
        with tqdm.tqdm(total=total) as progress_bar:
            for element in iterable:
                yield element
                progress_bar.update()
    else:
        try:
            current_progress_callback.max = total
            current_progress_callback.value = 0
        except AttributeError:
            raise ValueError(
                "A progress callback needs `max` and `value` attributes"
            )
        steps = current_progress_callback.max / 1000
        progress = 0
        for element in iterable:
            progress += 1
            if progress % steps < 1:
                current_progress_callback.value = progress
            yield element
        current_progress_callback.value = total


def set_progress_callback(progress_callback):
    """Set how long-running trials and benchmarks report progress.

    Parameters
    ----------
    progress_callback :
        None for no reporting, True for a tqdm bar on stderr, or any
        object with `max` and `value` attributes.
    """
    global PROGRESS_CALLBACK
    PROGRESS_CALLBACK = progress_callback


def encode_u32(value: int) -> bytes:
    """Encode a non-negative int as 4 big-endian bytes."""
    return struct.pack(">I", value)


def encode_list(items, encode_item) -> bytes:
    """Encode a sequence with a 4-byte big-endian count prefix.

    Parameters
    ----------
    items : sequence
        The items to encode.
    encode_item : callable
        A function that turns a single item into bytes.

    Returns
    -------
    : bytes
        The count followed by all encoded items.
    """
    return encode_u32(len(items)) + b"".join(
        encode_item(item) for item in items
    )


class TruncatedDataError(ValueError):
    """Used to indicate that a byte string ended before decoding finished."""
    pass


class ByteReader(object):
    """A cursor over a byte string for sequential decoding."""

    def __init__(self, data: bytes):
        self._data = bytes(data)
        self._offset = 0

    @property
    def remaining(self) -> int:
        """: int : The number of bytes not consumed yet."""
        return len(self._data) - self._offset

    def read(self, size: int) -> bytes:
        if size < 0 or self.remaining < size:
            raise TruncatedDataError(
                f"Needed {size} bytes at offset {self._offset}, "
                f"only {self.remaining} left"
            )
        chunk = self._data[self._offset: self._offset + size]
        self._offset += size
        return chunk

    def read_byte(self) -> int:
        return self.read(1)[0]

    def read_u32(self) -> int:
        return struct.unpack(">I", self.read(4))[0]

    def read_list(self, decode_item, max_count: int = 1 << 20) -> list:
        """Read a 4-byte count and then decode that many items.

        Parameters
        ----------
        decode_item : callable
            A function that is called with this reader for every item.
        max_count : int
            Counts above this value are rejected before decoding.
            Default is 2**20.

        Returns
        -------
        : list
            The decoded items.
        """
        count = self.read_u32()
        if count > max_count:
            raise TruncatedDataError(f"List count {count} is implausible")
        return [decode_item(self) for _ in range(count)]

    def expect_end(self) -> None:
        if self.remaining != 0:
            raise TruncatedDataError(
                f"{self.remaining} trailing bytes after decoding"
            )
