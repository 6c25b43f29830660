import streamlit as st
import os
import json
import logging

# Import custom modules
from config.settings import HeuristicsConfig, load_settings
from config.presets import load_presets, save_presets, apply_preset
from engine.errors import LazyMXError, ResourceExhausted
from engine.grounder import full_ground
from engine.search import SAT, solve
from frontend.parser import parse
from frontend.printer import emit_model, format_definition
from frontend.script import parse_script
from bench.generators import FAMILIES, InstanceSpec, generate
from bench.harness import MODES, grounding_estimate, sweep

LOG = logging.getLogger(__name__)

INSTANCES_DIR = os.path.join(os.path.dirname(__file__), "instances")

# Set page configuration
st.set_page_config(
    page_title="Lazy Model Expansion",
    page_icon="🧩",
    layout="wide"
)


def read_instance(name):
    """Read a bundled instance file; empty text when missing."""
    path = os.path.join(INSTANCES_DIR, name)
    try:
        with open(path, "r", encoding="utf-8") as f:
            return f.read()
    except OSError:
        return ""


# Initialize session state
if "problem_text" not in st.session_state:
    st.session_state.problem_text = read_instance("ex33.thy")
if "structure_text" not in st.session_state:
    st.session_state.structure_text = read_instance("ex33.str")
if "script_text" not in st.session_state:
    st.session_state.script_text = read_instance("ex33.trace")
if "preset" not in st.session_state:
    st.session_state.preset = "default"
if "last_result" not in st.session_state:
    st.session_state.last_result = None
if "bench_reports" not in st.session_state:
    st.session_state.bench_reports = None


def run_solver(problem_text, structure_text, script_text, config, check, outputs):
    """Parse, solve and package everything the Solve tab shows."""
    problem, structure = parse(problem_text, structure_text)
    theory = problem.canonical()
    script = parse_script(script_text or "", theory.vocabulary)
    config = script.apply(config)
    result = solve(theory, structure, config, script.entries, outputs, check=check)
    shown = outputs if outputs is not None else sorted(theory.original_predicates)
    return {
        "status": result.status,
        "model_text": emit_model(result.model, shown, theory.vocabulary, result.status),
        "checked": result.checked,
        "stats": result.stats,
        "ground": format_definition(result.state.d_ground, result.state.vocabulary),
        "plan": result.plan,
    }


def uploaded_text(label, key):
    uploaded = st.file_uploader(label, type=["thy", "str", "trace", "txt"], key=key)
    if uploaded is not None:
        return uploaded.getvalue().decode("utf-8")
    return None


# Main function
def main():
    # Create tabs
    tab1, tab2, tab3, tab4 = st.tabs(["Solve", "Ground", "Bench", "Settings"])
    presets = load_presets()

    with tab1:
        st.title("Lazy Model Expansion")

        col1, col2 = st.columns(2)
        with col1:
            text = uploaded_text("Upload problem file", "problem_upload")
            if text is not None:
                st.session_state.problem_text = text
            problem_text = st.text_area("Problem", st.session_state.problem_text, height=360)
            st.session_state.problem_text = problem_text
        with col2:
            text = uploaded_text("Upload structure file", "structure_upload")
            if text is not None:
                st.session_state.structure_text = text
            structure_text = st.text_area("Input structure", st.session_state.structure_text, height=150)
            st.session_state.structure_text = structure_text
            script_text = st.text_area("Decision script (optional)", st.session_state.script_text, height=150)
            st.session_state.script_text = script_text

        col1, col2, col3, col4 = st.columns(4)
        with col1:
            names = sorted(presets)
            preset = st.selectbox("Preset", names,
                                  index=names.index(st.session_state.preset) if st.session_state.preset in names else 0)
            st.session_state.preset = preset
        with col2:
            mode = st.selectbox("Mode", ["(preset)"] + list(MODES))
        with col3:
            outputs_text = st.text_input("Output symbols", placeholder="all")
        with col4:
            check = st.checkbox("Check model", value=True)

        if st.button("Solve", key="solve", use_container_width=True):
            try:
                config = apply_preset(preset, load_settings(), presets)
                if mode != "(preset)":
                    config = config.updated(mode=mode)
                outputs = [s.strip() for s in outputs_text.split(",") if s.strip()] or None
                with st.spinner(f"Solving in {config.mode} mode..."):
                    st.session_state.last_result = run_solver(problem_text, structure_text, script_text,
                                                              config, check, outputs)
            except ResourceExhausted as e:
                st.session_state.last_result = None
                st.error(f"Resource budget exhausted: {e.reason}")
                st.json(e.stats)
            except (LazyMXError, KeyError, ValueError) as e:
                st.session_state.last_result = None
                st.error(f"Error: {str(e)}")

        result = st.session_state.last_result
        if result is not None:
            if result["status"] == SAT:
                st.success("SAT" + (" (model check passed)" if result["checked"] else ""))
            else:
                st.warning(result["status"])
            with st.expander("Model", expanded=True):
                st.code(result["model_text"], language=None)
            with st.expander("Statistics", expanded=False):
                st.json(result["stats"])
            with st.expander("Ground definition D_g", expanded=False):
                st.code(result["ground"] or "(empty)", language=None)
            if result["plan"]:
                with st.expander("Global plan", expanded=False):
                    st.json(result["plan"])

    with tab2:
        st.title("Eager Grounding")
        st.markdown("Full grounding of the problem in the Solve tab, with the size estimate.")
        if st.button("Ground", key="ground"):
            try:
                problem, structure = parse(st.session_state.problem_text, st.session_state.structure_text)
                theory = problem.canonical()
                vocabulary = theory.vocabulary.copy()
                d_ground, stats = full_ground(theory.definition, vocabulary, structure)
                col1, col2, col3 = st.columns(3)
                col1.metric("Ground rules", len(d_ground))
                col2.metric("Ground atoms", stats["ground_atoms"])
                col3.metric("Estimate", f"{grounding_estimate(theory):g}")
                st.code(format_definition(d_ground, vocabulary) or "(empty)", language=None)
            except LazyMXError as e:
                st.error(f"Error: {str(e)}")

    with tab3:
        st.title("Benchmarks")
        col1, col2, col3 = st.columns(3)
        with col1:
            family = st.selectbox("Family", list(FAMILIES))
            arity = st.number_input("Arity (0 = family default)", min_value=0, value=0)
        with col2:
            sizes_text = st.text_input("Domain sizes", "5,10,20")
            seed = st.number_input("Seed", min_value=0, value=0)
        with col3:
            modes = st.multiselect("Modes", list(MODES), default=["lazy", "eager"])
            use_oracle = st.checkbox("Cross-check with oracle (tiny instances only)")

        with st.expander("Generated instance (first size)", expanded=False):
            try:
                first = int(sizes_text.split(",")[0])
                problem_text, structure_text = generate(InstanceSpec(family, first, int(seed), arity or None))
                st.code(problem_text, language=None)
                if structure_text:
                    st.code(structure_text, language=None)
            except (LazyMXError, ValueError) as e:
                st.error(f"Error: {str(e)}")

        if st.button("Run benchmark", key="bench"):
            try:
                sizes = [int(s) for s in sizes_text.split(",") if s.strip()]
                with st.spinner("Running..."):
                    reports = sweep(family, sizes, modes, seed=int(seed), arity=arity or None,
                                    config=load_settings(), oracle=use_oracle)
                st.session_state.bench_reports = [r.row() for r in reports]
            except (LazyMXError, ValueError) as e:
                st.error(f"Error: {str(e)}")

        rows = st.session_state.bench_reports
        if rows:
            st.dataframe(rows, use_container_width=True)
            by_mode = {}
            for row in rows:
                by_mode.setdefault(row["mode"], []).append(row)
            chart_sizes = sorted({row["size"] for row in rows})
            st.subheader("Time (s)")
            st.line_chart({m: [next((r["time"] for r in rs if r["size"] == s), None) for s in chart_sizes]
                           for m, rs in by_mode.items()})
            st.subheader("Final ground atoms")
            st.line_chart({m: [next((r["ground_atoms"] for r in rs if r["size"] == s), None) for s in chart_sizes]
                           for m, rs in by_mode.items()})

    with tab4:
        st.title("Heuristic Presets")
        st.info("Presets overlay the defaults (and LAZYMX_* environment overrides). Only listed fields change.")
        st.json(load_settings().model_dump())

        name = st.selectbox("Preset to edit", sorted(presets), key="preset_edit")
        edited = st.text_area("Overrides (JSON)", json.dumps(presets.get(name, {}), indent=4), height=240)
        new_name = st.text_input("Save as", name)

        # Plain button, no form
        if st.button("Save Preset"):
            try:
                overrides = json.loads(edited)
                HeuristicsConfig().updated(**overrides)
                presets[new_name] = overrides
                save_presets(presets)
                st.success(f"Preset '{new_name}' saved")
            except (ValueError, TypeError) as e:
                st.error(f"Invalid preset: {str(e)}")


if __name__ == "__main__":
    main()
