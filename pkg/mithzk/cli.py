#!python


# builtin
import contextlib
import os
import logging
import time
import copy
import json

# external
import click

# local
import mithzk
import mithzk.utils

with open(
    os.path.join(mithzk.utils.LIB_PATH, "interface_parameters.json"),
    "r"
) as in_file:
    INTERFACE_PARAMETERS = json.load(in_file)

EXIT_SUCCESS = 0
EXIT_REJECT = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_SESSION = 4
DERIVED_MODE_LABEL = (
    "Challenges are derived from the commitments (Fiat-Shamir style). "
    "This non-interactive mode is a heuristic outside the soundness "
    "guarantee of the interactive protocol."
)
BENCH_COLUMNS = [
    "Random generation",
    "Share",
    "Reconstruct",
    "Protocol",
    "Commit",
    "Verify",
]
BENCH_FIELDS = ("f256", "f1024")


def exit_code_for(error: Exception) -> int:
    """The exit code of a command that raised error."""
    import mithzk.session
    if isinstance(error, mithzk.session.SessionError):
        return EXIT_SESSION
    if isinstance(error, OSError):
        return EXIT_IO
    return EXIT_USAGE


@contextlib.contextmanager
def parse_cli_settings(command_name: str, **kwargs):
    """A context manager that parses and logs CLI settings.

    Exceptions raised inside the context are logged and turned into the
    exit code of exit_code_for.

    Parameters
    ----------
    command_name : str
        The name of the command that utilizes these CLI settings.
    **kwargs
        All values that need to be logged.
        Values (if included) that explicitly will be parsed are:
            threads
            disable_log_stream
            log_file
            parameter_file
            export_parameters
            seed
            insecure_seed

    Returns
    -------
    : dict
        A dictionary with parsed parameters.
    """
    try:
        start_time = time.time()
        kwargs = {key: arg for key, arg in kwargs.items() if arg is not None}
        if ("parameter_file" in kwargs):
            kwargs["parameter_file"] = os.path.abspath(
                kwargs["parameter_file"]
            )
            parameters = mithzk.utils.load_parameters(
                kwargs["parameter_file"]
            )
            kwargs.update(parameters)
        if "threads" not in kwargs:
            kwargs["threads"] = INTERFACE_PARAMETERS[
                "threads"
            ]["default"]
        kwargs["threads"] = mithzk.utils.set_threads(
            kwargs["threads"]
        )
        if "log_file" not in kwargs:
            kwargs["log_file"] = INTERFACE_PARAMETERS[
                "log_file"
            ]["default"]
        if "disable_log_stream" not in kwargs:
            kwargs[
                "disable_log_stream"
            ] = INTERFACE_PARAMETERS[
                "disable_log_stream"
            ]["default"]
        kwargs["log_file"] = mithzk.utils.set_logger(
            log_file_name=kwargs["log_file"],
            stream=not kwargs["disable_log_stream"],
        )
        mithzk.utils.show_platform_info()
        mithzk.utils.show_python_info()
        logging.info(
            f"Running CLI command `mithzk "
            f"{command_name}` with parameters:"
        )
        max_len = max(len(key) + 1 for key in kwargs)
        for key, value in sorted(kwargs.items()):
            logging.info(f"{key:<{max_len}} - {value}")
        logging.info("")
        if ("seed" in kwargs) and not kwargs.get("insecure_seed", False):
            raise click.UsageError("--seed requires --insecure-seed")
        if "export_parameters" in kwargs:
            kwargs["export_parameters"] = os.path.abspath(
                kwargs["export_parameters"]
            )
            mithzk.utils.save_parameters(
                kwargs["export_parameters"],
                kwargs
            )
        yield kwargs
    except click.exceptions.Exit:
        raise
    except Exception as error:
        exit_code = exit_code_for(error)
        if isinstance(
            error,
            (ValueError, TypeError, OSError, RuntimeError, click.ClickException)
        ):
            logging.error(f"ERROR: {error}")
        else:
            logging.exception("Something went wrong, execution incomplete!")
        raise click.exceptions.Exit(exit_code)
    else:
        logging.info(
            f"Analysis done in {time.time() - start_time:.2f} seconds."
        )
    finally:
        mithzk.utils.set_logger(log_file_name=None)


def cli_option(
    parameter_name: str,
    as_argument: bool = False,
    **kwargs
):
    """A wrapper for click.options and click.arguments using local defaults.

    Parameters
    ----------
    parameter_name : str
        The name of the parameter or argument.
        It's default values need to be present in
        lib/interface_parameters.json.
    as_argument : bool
        If True, a click.argument is returned.
        If False, a click.option is returned.
        Default is False.
    **kwargs
        Items that overwrite the default values of
        lib/interface_parameters.json.
        These need to be valid items for click.
        A special "type" dict can be used to pass a click.Path or click.Choice,
        that has the following format:
        type = {"name": "path" or "choice", **choice_or_path_kwargs}
        A "long_name" replaces the option name on the command line.

    Returns
    -------
    : click.option, click.argument
        A click.option or click.argument decorator.
    """
    parameters = copy.deepcopy(
        INTERFACE_PARAMETERS[parameter_name]
    )
    parameters.update(kwargs)
    if "type" in parameters:
        if parameters["type"] == "int":
            parameters["type"] = int
        elif parameters["type"] == "float":
            parameters["type"] = float
        elif parameters["type"] == "str":
            parameters["type"] = str
        elif isinstance(parameters["type"], dict):
            parameter_type = parameters["type"].pop("name")
            if parameter_type == "path":
                parameters["type"] = click.Path(**parameters["type"])
            elif parameter_type == "choice":
                options = parameters["type"].pop("options")
                parameters["type"] = click.Choice(
                    options,
                    **parameters["type"]
                )
    if "default" in parameters:
        if "is_flag" in parameters:
            parameters["show_default"] = False
        else:
            parameters["show_default"] = True
    long_name = parameters.pop("long_name", parameter_name)
    if not as_argument:
        names = [f"--{long_name}"]
        if "short_name" in parameters:
            names.append(f"-{parameters.pop('short_name')}")
        return click.option(
            *names,
            parameter_name,
            **parameters,
        )
    else:
        parameters.pop("short_name", None)
        return click.argument(
            parameter_name,
            type=parameters["type"],
            required=True
        )


def random_source(parameters: dict):
    """A seeded source if --seed was given, else OS entropy."""
    import mithzk.field
    if "seed" in parameters:
        logging.warning(
            "WARNING: All randomness is derived from --seed, "
            "proofs are NOT zero-knowledge"
        )
        return mithzk.field.RandomSource(parameters["seed"])
    return mithzk.field.RandomSource()


def load_statement(parameters: dict):
    """The statement of --statement, checked against --circuit if given."""
    import mithzk.circuit
    statement = mithzk.circuit.load_statement(parameters["statement"])
    if "circuit" in parameters:
        circuit = mithzk.circuit.load_circuit(parameters["circuit"])
        if mithzk.circuit.print_circuit(
            circuit
        ) != mithzk.circuit.print_circuit(statement.circuit):
            raise mithzk.circuit.StatementError(
                f"{parameters['circuit']} is not the circuit of "
                f"{parameters['statement']}"
            )
    return statement


def open_transport(parameters: dict):
    """Connect or listen as configured for session mode."""
    import mithzk.session
    if ("listen" in parameters) == ("connect" in parameters):
        raise click.UsageError(
            "Session mode needs exactly one of --listen and --connect"
        )
    if "listen" in parameters:
        return mithzk.session.listen(
            parameters["listen"],
            parameters["timeout"]
        )
    return mithzk.session.connect(
        parameters["connect"],
        parameters["timeout"]
    )


def log_soundness(repetitions: int, scheme) -> None:
    import mithzk.mith
    logging.info(
        f"Repetitions: {repetitions}, scheme: {scheme.name}, "
        f"soundness error <= {mithzk.mith.soundness_bound(repetitions):.3e}"
    )


def time_call(function, iterations: int) -> float:
    """The mean runtime of function() in milliseconds."""
    start_time = time.perf_counter()
    for iteration in range(iterations):
        function()
    return (time.perf_counter() - start_time) / iterations * 1000


def square_statement(modulus) -> tuple:
    """The statement x·x = 9 with witness 3 over any field."""
    import mithzk.circuit
    circuit = mithzk.circuit.Circuit(
        mithzk.circuit.Topology(0, 1, 1),
        mithzk.circuit.Multiplication(
            1,
            mithzk.circuit.SInput(0),
            mithzk.circuit.SInput(0)
        ),
        modulus
    )
    witness = mithzk.circuit.Witness((modulus.element(3),))
    return mithzk.circuit.Statement(circuit, (), modulus.element(9)), witness


def bench_commitments(modulus, scheme, iterations: int, rng) -> dict:
    """Commit and verify timings of a scheme on the views of x·x.

    Commit covers all 5 views; Verify opens the 2 views of one challenge.
    """
    import mithzk.mith
    import mithzk.mpc
    import mithzk.sss
    statement, witness = square_statement(modulus)
    prover_rand = mithzk.mith.sample_prover_rand(statement, scheme, rng)
    execution = mithzk.mpc.run_protocol(
        statement,
        [
            mithzk.sss.share(witness.secret_inputs[0], prover_rand.r_ss[0])
        ],
        prover_rand.r_mpc
    )
    views = execution.views
    keys = prover_rand.r_cs
    commitments = [scheme.commit(key, view) for key, view in zip(keys, views)]

    def verify_pair():
        return all(
            scheme.verify(views[party], commitments[party], keys[party])
            for party in (0, 1)
        )
    return {
        "Commit": time_call(
            lambda: mithzk.mith.commit_views(statement, scheme, views, keys),
            iterations
        ),
        "Verify": time_call(verify_pair, iterations),
    }


def bench_field_rows(modulus, schemes, iterations: int, rng) -> list:
    """Secret sharing, multiplication gate and commitment timings.

    The sharing and gate timings are shared by the rows of all schemes
    that support the field; other schemes are skipped with a warning.
    """
    import mithzk.commit
    import mithzk.field
    import mithzk.mpc
    import mithzk.sss
    randomness = mithzk.sss.sample_ss_randomness(rng, modulus)
    secret = mithzk.field.sample_fe(rng, modulus)
    sharing = mithzk.sss.share(secret, randomness)
    gate_randomness = tuple(
        mithzk.sss.sample_ss_randomness(rng, modulus)
        for party in mithzk.sss.PARTIES
    )
    primitives = {
        "Random generation": time_call(
            lambda: mithzk.sss.sample_ss_randomness(rng, modulus),
            iterations
        ),
        "Share": time_call(
            lambda: mithzk.sss.share(secret, randomness),
            iterations
        ),
        "Reconstruct": time_call(
            lambda: mithzk.sss.reconstruct(sharing),
            iterations
        ),
        "Protocol": time_call(
            lambda: mithzk.mpc.gate_mul(sharing, sharing, gate_randomness),
            iterations
        ),
    }
    rows = []
    for scheme in schemes:
        try:
            scheme.check_field(modulus)
        except mithzk.commit.PedersenParameterError as error:
            logging.warning(f"WARNING: Skipping {scheme.name}: {error}")
            continue
        row = dict(primitives)
        row.update(bench_commitments(modulus, scheme, iterations, rng))
        rows.append((scheme.name, row))
    return rows


def bench_mith_row(statement, witness, scheme, iterations: int, rng) -> dict:
    """Timings of one MitH repetition split into its stages."""
    import mithzk.mith
    import mithzk.mpc
    import mithzk.sss
    prover_rand = mithzk.mith.sample_prover_rand(statement, scheme, rng)
    sharings = [
        mithzk.sss.share(value, randomness)
        for value, randomness in zip(witness.secret_inputs, prover_rand.r_ss)
    ]
    execution = mithzk.mpc.run_protocol(
        statement,
        sharings,
        prover_rand.r_mpc
    )
    state, commitment = mithzk.mith.commit_views(
        statement,
        scheme,
        execution.views,
        prover_rand.r_cs
    )
    challenge = mithzk.mith.Challenge(1, 2)
    verifier_state = mithzk.mith.VerifierState(
        statement,
        scheme,
        commitment,
        challenge
    )
    response = mithzk.mith.prover_respond(state, challenge)
    return {
        "Random generation": time_call(
            lambda: mithzk.mith.sample_prover_rand(statement, scheme, rng),
            iterations
        ),
        "Share": time_call(
            lambda: [
                mithzk.sss.share(value, randomness)
                for value, randomness in zip(
                    witness.secret_inputs,
                    prover_rand.r_ss
                )
            ],
            iterations
        ),
        "Reconstruct": time_call(
            lambda: [mithzk.sss.reconstruct(sharing) for sharing in sharings],
            iterations
        ),
        "Protocol": time_call(
            lambda: mithzk.mpc.run_protocol(
                statement,
                sharings,
                prover_rand.r_mpc
            ),
            iterations
        ),
        "Commit": time_call(
            lambda: mithzk.mith.commit_views(
                statement,
                scheme,
                execution.views,
                prover_rand.r_cs
            ),
            iterations
        ),
        "Verify": time_call(
            lambda: mithzk.mith.verifier_check(verifier_state, response),
            iterations
        ),
    }


def bench_table(
    field_presets,
    circuit_file_names,
    schemes,
    iterations: int,
    rng,
):
    """A table of mean timings in ms, one row per field or circuit/scheme.

    Circuit rows are labelled with their node count (inputs and constants
    included) and their number of multiplications.
    """
    import pandas as pd
    import mithzk.circuit
    import mithzk.field
    import mithzk.harness
    rows = {}
    for field_preset in field_presets:
        logging.info(f"Benchmarking primitives over {field_preset}")
        modulus = mithzk.field.load_modulus(field_preset)
        for scheme_name, row in bench_field_rows(
            modulus,
            schemes,
            iterations,
            rng
        ):
            rows[f"Primitives ({field_preset}, {scheme_name})"] = row
    for circuit_file_name in circuit_file_names:
        circuit = mithzk.circuit.load_circuit(circuit_file_name)
        witness = mithzk.circuit.Witness(
            circuit.modulus.elements(
                range(3, 3 + circuit.topology.n_secret)
            )
        )
        statement = mithzk.harness.true_statement(
            circuit,
            mithzk.harness.default_public_inputs(circuit),
            witness
        )
        label = (
            f"MitH ({mithzk.circuit.node_count(circuit)} gates, "
            f"{len(mithzk.circuit.multiplication_gates(circuit))} MUL, "
            f"F_{circuit.modulus.p}"
        )
        for scheme in schemes:
            logging.info(f"Benchmarking {label} with {scheme.name}")
            scheme.check_field(circuit.modulus)
            rows[f"{label}, {scheme.name})"] = bench_mith_row(
                statement,
                witness,
                scheme,
                iterations,
                rng
            )
    return pd.DataFrame.from_dict(
        rows,
        orient="index",
        columns=BENCH_COLUMNS
    )


@click.group(
    context_settings=dict(
        help_option_names=['-h', '--help'],
    ),
    invoke_without_command=True
)
@click.pass_context
@click.version_option(mithzk.__version__, "-v", "--version")
def run(ctx, **kwargs):
    name = f"mithzk {mithzk.__version__}"
    click.echo("*" * (len(name) + 4))
    click.echo(f"* {name} *")
    click.echo("*" * (len(name) + 4))
    if ctx.invoked_subcommand is None:
        click.echo(run.get_help(ctx))


@run.command("prove", help="Prove knowledge of a witness for a statement.")
@cli_option("statement")
@cli_option("witness")
@cli_option("circuit")
@cli_option("out")
@cli_option("reps")
@cli_option("scheme")
@cli_option("pedersen_group")
@cli_option("mode")
@cli_option("listen")
@cli_option("connect")
@cli_option("timeout")
@cli_option("seed")
@cli_option("insecure_seed")
@cli_option("log_file")
@cli_option("threads")
@cli_option("disable_log_stream")
@cli_option("parameter_file")
@cli_option("export_parameters")
def prove(**kwargs):
    with parse_cli_settings("prove", **kwargs) as parameters:
        import mithzk.circuit
        import mithzk.commit
        import mithzk.mith
        import mithzk.session
        repetitions = mithzk.mith.check_repetitions(parameters["reps"])
        statement = load_statement(parameters)
        witness = mithzk.circuit.load_witness(
            parameters["witness"],
            statement.modulus
        )
        mithzk.circuit.check_witness(statement, witness)
        if not mithzk.circuit.relation_holds(statement, witness):
            raise mithzk.circuit.StatementError(
                "The witness does not satisfy the statement"
            )
        scheme = mithzk.commit.get_scheme(
            parameters["scheme"],
            parameters["pedersen_group"]
        )
        scheme.check_field(statement.modulus)
        rng = random_source(parameters)
        log_soundness(repetitions, scheme)
        start_time = time.time()
        if parameters["mode"] == "session":
            transport = open_transport(parameters)
            try:
                accepted = mithzk.session.prover_session(
                    transport,
                    statement,
                    witness,
                    repetitions,
                    rng,
                    scheme=scheme
                )
            finally:
                transport.close()
            logging.info(
                f"Session finished in {time.time() - start_time:.2f} "
                f"seconds, verifier {'accepted' if accepted else 'rejected'}"
            )
            if not accepted:
                click.get_current_context().exit(EXIT_REJECT)
        else:
            if "out" not in parameters:
                raise click.UsageError("Derived mode needs --out")
            logging.info(DERIVED_MODE_LABEL)
            proof = mithzk.mith.prove_repeated(
                witness,
                statement,
                repetitions,
                rng,
                scheme=scheme,
                mode="derived"
            )
            logging.info(
                f"Proof created in {time.time() - start_time:.2f} seconds"
            )
            logging.info(f"Writing proof to {parameters['out']}")
            with open(parameters["out"], "wb") as outfile:
                outfile.write(mithzk.mith.encode_proof(proof, scheme))


@run.command("verify", help="Verify a proof file or act as session verifier.")
@cli_option("statement")
@cli_option("proof")
@cli_option("circuit")
@cli_option("reps")
@cli_option("scheme", default=None, show_default=False)
@cli_option("pedersen_group")
@cli_option("mode")
@cli_option("listen")
@cli_option("connect")
@cli_option("timeout")
@cli_option("verbose")
@cli_option("seed")
@cli_option("insecure_seed")
@cli_option("log_file")
@cli_option("threads")
@cli_option("disable_log_stream")
@cli_option("parameter_file")
@cli_option("export_parameters")
def verify(**kwargs):
    with parse_cli_settings("verify", **kwargs) as parameters:
        import mithzk.commit
        import mithzk.mith
        import mithzk.session
        statement = load_statement(parameters)
        scheme = None
        if "scheme" in parameters:
            scheme = mithzk.commit.get_scheme(
                parameters["scheme"],
                parameters["pedersen_group"]
            )
        if parameters["mode"] == "session":
            repetitions = mithzk.mith.check_repetitions(parameters["reps"])
            if scheme is None:
                scheme = mithzk.commit.get_scheme(
                    "prf",
                    parameters["pedersen_group"]
                )
            log_soundness(repetitions, scheme)
            transport = open_transport(parameters)
            try:
                accepted = mithzk.session.verifier_session(
                    transport,
                    statement,
                    repetitions,
                    random_source(parameters),
                    scheme=scheme
                )
            finally:
                transport.close()
        else:
            if "proof" not in parameters:
                raise click.UsageError("Derived mode needs --proof")
            logging.info(f"Reading proof from {parameters['proof']}")
            with open(parameters["proof"], "rb") as infile:
                data = infile.read()
            logging.info(DERIVED_MODE_LABEL)
            try:
                proof, scheme = mithzk.mith.decode_proof(
                    data,
                    statement.modulus,
                    scheme,
                    parameters["pedersen_group"]
                )
            except mithzk.mith.ProofFormatError as error:
                logging.info(f"Malformed proof: {error}")
                verdicts = [False]
            else:
                log_soundness(proof.repetitions, scheme)
                verdicts = mithzk.mith.check_repeated(
                    statement,
                    proof,
                    scheme,
                    mode="derived"
                )
            if parameters.get("verbose", False):
                for repetition, verdict in enumerate(verdicts):
                    logging.info(
                        f"Repetition {repetition}: "
                        f"{'accept' if verdict else 'reject'}"
                    )
            accepted = all(verdicts)
        logging.info(f"Verdict: {'accept' if accepted else 'reject'}")
        click.echo("accept" if accepted else "reject")
        if not accepted:
            click.get_current_context().exit(EXIT_REJECT)


@run.command("selftest", help="Run all security experiments.")
@cli_option("quick")
@cli_option("out")
@cli_option("seed")
@cli_option("insecure_seed")
@cli_option("log_file")
@cli_option("threads")
@cli_option("disable_log_stream")
@cli_option("parameter_file")
@cli_option("export_parameters")
def selftest(**kwargs):
    with parse_cli_settings("selftest", **kwargs) as parameters:
        import mithzk.harness
        reports = mithzk.harness.run_selftest(
            random_source(parameters),
            quick=parameters["quick"]
        )
        click.echo(mithzk.harness.reports_to_text(reports), nl=False)
        if "out" in parameters:
            logging.info(f"Writing reports to {parameters['out']}")
            with open(parameters["out"], "w") as outfile:
                outfile.write(mithzk.harness.reports_to_json(reports))
        if not all(report.passed for report in reports):
            click.get_current_context().exit(EXIT_REJECT)


@run.command("bench", help="Time the primitives and MitH repetitions.")
@cli_option("iterations")
@cli_option("quick")
@cli_option("pedersen_group")
@cli_option("out")
@cli_option("log_file")
@cli_option("threads")
@cli_option("disable_log_stream")
@cli_option("parameter_file")
@cli_option("export_parameters")
def bench(**kwargs):
    with parse_cli_settings("bench", **kwargs) as parameters:
        import mithzk.commit
        import mithzk.field
        iterations = parameters["iterations"]
        field_presets = (mithzk.field.default_field_preset(),) + BENCH_FIELDS
        if parameters["quick"]:
            iterations = min(iterations, 3)
            field_presets = field_presets[:1]
        if iterations < 1:
            raise ValueError("--iterations must be at least 1")
        circuit_file_names = [
            os.path.join(mithzk.utils.BENCH_CIRCUIT_PATH, file_name)
            for file_name in sorted(
                os.listdir(mithzk.utils.BENCH_CIRCUIT_PATH)
            ) if file_name.endswith(".arith")
        ]
        schemes = [
            mithzk.commit.get_scheme("prf"),
            mithzk.commit.get_scheme(
                "pedersen",
                parameters["pedersen_group"]
            ),
        ]
        table = bench_table(
            field_presets,
            circuit_file_names,
            schemes,
            iterations,
            mithzk.field.RandomSource()
        )
        click.echo(table.to_string(float_format=lambda value: f"{value:.3f}"))
        if "out" in parameters:
            logging.info(f"Writing benchmark table to {parameters['out']}")
            table.to_csv(parameters["out"])
