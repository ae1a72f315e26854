from pytest import mark, raises

from tests.mixins import TestNetworksMixin
from utilities.ftnet import (
    BUILTINS, Block, InvalidPlacement, LevelMismatch, Network, NetworkParseError, NonCliffordGate, TimeStep,
    UnknownBuiltin, WrongNetwork, backend_name, builtin, compile_single_step, format_network, inject_faults,
    parse_network, resources, simulate, toffoli_outcome_analysis, verify_network
)

CLIFFORD_BUILTINS = [
    ('transversal-cx', 1), ('transfer-out', 1), ('transfer-in', 1), ('teleport', 1), ('teleport-into-full', 1),
    ('cnot-two-teleport', 2), ('cnot-teleport-merged', 2), ('cnot-multi', 4), ('cnot-gc', 2),
]

PARTNER_CLASH = [
    'NETWORK clash v1 k=1',
    'BLOCK A memory',
    'BLOCK B memory',
    'BLOCK C memory',
    'STEP online',
    '  TGATE CX A B',
    '  TGATE CX A C',
]


class TestNetworkFormat(TestNetworksMixin):
    def test_hand_written_teleport(self):
        net = self.networks['teleport-k1']
        assert [block.role for block in net.blocks] == ['memory', 'ancilla', 'accumulator']
        assert [step.label for step in net.steps] == ['offline', 'offline', 'online']
        assert net.inputs == [('S', 0)]
        assert net.outputs == [('D', 0)]
        assert net.action == []

    @mark.parametrize('name', sorted(BUILTINS))
    def test_printer_covers_every_builtin(self, name):
        text = format_network(builtin(name))
        assert format_network(parse_network(text.splitlines())) == text

    def test_missing_header(self):
        with raises(NetworkParseError, match='no NETWORK header'):
            parse_network(['# empty', ''])

    def test_unsupported_version(self):
        with raises(NetworkParseError, match='line 1'):
            parse_network(['NETWORK old v0 k=1'])

    def test_op_before_step(self):
        with raises(NetworkParseError, match='line 3'):
            parse_network(['NETWORK early v1 k=1', 'BLOCK B memory', 'TGATE CX B B'])

    def test_condition_needs_earlier_outcome(self):
        with raises(NetworkParseError, match='uses an outcome'):
            parse_network(['NETWORK cond v1 k=1', 'BLOCK B memory', 'STEP online', 'COND a=-1 APPLY X B:0'])

    def test_block_in_two_connecting_sets(self):
        with raises(NetworkParseError, match='joins two sets'):
            parse_network(PARTNER_CLASH)

    def test_validate_reports_placement(self):
        net = Network('bad', 1, [Block('B', 'register')])
        with raises(InvalidPlacement):
            net.validate()


class TestBuiltins(TestNetworksMixin):
    @mark.parametrize('name', ['cnot-two-teleport', 'cnot-teleport-merged', 'cnot-gc'])
    def test_cnot_resources(self, name):
        report = resources(builtin(name))
        assert list(report.offline) == self.expected['resources'][name]['offline']
        assert list(report.online) == self.expected['resources'][name]['online']

    def test_teleport_resources(self):
        report = resources(builtin('teleport'))
        assert report.steps_offline == 2
        assert report.steps_online == 1
        assert resources(self.networks['teleport-k1']).online == report.online

    def test_empty_network(self):
        report = resources(Network('empty', 1, [Block('B', 'memory')], [TimeStep('offline')]))
        assert report.offline == (0, 1, 0)
        assert report.online == (0, 0, 0)

    def test_unknown_name(self):
        with raises(UnknownBuiltin):
            builtin('teleport-twice')

    def test_placement_sets_k(self):
        net = builtin('cnot-gc', place=[2, 0])
        assert net.k == 3
        assert net.action == [('CX', [2, 0])]

    @mark.parametrize('name, place', [
        ('teleport', [0]),
        ('cnot-multi', [0, 1, 2]),
        ('cnot-gc', [1, 1]),
        ('cnot-multi', [0, 1, 1, 2]),
    ])
    def test_bad_placement(self, name, place):
        with raises(InvalidPlacement):
            builtin(name, place=place)

    def test_k_below_minimum(self):
        with raises(InvalidPlacement):
            builtin('toffoli', k=2)


class TestLogicalVerification(TestNetworksMixin):
    @mark.parametrize('name, k', CLIFFORD_BUILTINS)
    def test_clifford_builtins(self, name, k):
        net = builtin(name, k)
        assert backend_name(net, 'logical') == 'tableau'
        result = verify_network(net, trials=3, seed=5)
        assert result.passed, result.failure
        assert result.checked == 2 ** len(net.inputs) + 3

    @mark.parametrize('name', ['teleport-k1', 'cx-pair'])
    def test_hand_written_networks(self, name):
        assert verify_network(self.networks[name], trials=3).passed

    @mark.parametrize('name', ['toffoli', 'toffoli-shared'])
    def test_toffoli_runs_dense(self, name):
        net = builtin(name)
        assert backend_name(net, 'logical') == 'dense'
        result = verify_network(net, trials=2, seed=1)
        assert result.passed, result.failure

    def test_placed_teleport_records_outcomes(self):
        run = simulate(builtin('teleport', 2, [0, 1]), seed=3, inputs='1')
        assert set(run.outcomes) == {'t', 'a', 'b'}
        assert run.backend.name == 'tableau'

    def test_forced_branch(self):
        net = builtin('teleport')
        run = simulate(net, seed=0, inputs='+', forced={'a': -1, 'b': -1})
        assert run.outcomes == {'a': -1, 'b': -1}
        assert [event.op for event in run.trace].count('cond') == 2
        assert verify_network(net, trials=2, forced={'a': -1, 'b': -1}).passed

    def test_same_seed_same_outcomes(self):
        net = builtin('cnot-gc')
        assert simulate(net, seed=9, inputs='10').outcomes == simulate(net, seed=9, inputs='10').outcomes

    def test_physical_gate_needs_physical_level(self):
        with raises(LevelMismatch):
            verify_network(self.networks['intrablock-cx'], trials=0)

    def test_inputs_must_match(self):
        with raises(InvalidPlacement):
            simulate(builtin('teleport'), inputs='01')

    def test_unknown_level(self):
        with raises(LevelMismatch):
            simulate(builtin('teleport'), level='encoded')


class TestPhysicalLevel(TestNetworksMixin):
    @mark.parametrize('name', ['teleport-k1', 'cx-pair'])
    def test_encoded_on_steane(self, name):
        result = verify_network(self.networks[name], self.steane, 'physical', trials=0, seed=2)
        assert result.passed, result.failure
        assert result.checked == 2 ** len(self.networks[name].inputs)

    def test_code_is_required(self):
        with raises(LevelMismatch):
            simulate(self.networks['cx-pair'], level='physical')

    def test_forced_outcomes_are_logical_only(self):
        with raises(LevelMismatch):
            simulate(self.networks['teleport-k1'], self.steane, 'physical', forced={'a': 1})

    def test_dense_networks_are_refused(self):
        with raises(LevelMismatch):
            verify_network(builtin('toffoli'), self.trivial3, 'physical')

    def test_code_must_match_k(self):
        with raises(InvalidPlacement):
            simulate(builtin('transversal-cx', 7), self.steane, 'physical')


class TestCompiler:
    def test_single_online_step(self):
        net = compile_single_step([('H', [0]), ('CX', [0, 1])], 2)
        assert resources(net).steps_online == 1
        assert all(op.gate is None for _, _, op in net.ops() if op.kind == 'cond')
        result = verify_network(net, trials=3, seed=4)
        assert result.passed, result.failure

    def test_wide_networks_draw_seeded_basis_cases(self):
        net = compile_single_step([('CX', [0, 4]), ('H', [2])], 5)
        first = verify_network(net, trials=2, seed=6)
        assert first.passed, first.failure
        assert first.checked == 4
        assert verify_network(net, trials=2, seed=6) == first

    def test_clashing_gates_split_offline_steps(self):
        net = compile_single_step([('CX', [0, 1]), ('CX', [1, 2])], 1, blocks=3)
        report = resources(net)
        assert report.steps_offline == 3
        assert report.steps_online == 1
        assert verify_network(net, trials=2).passed

    def test_non_clifford_gate(self):
        with raises(NonCliffordGate):
            compile_single_step([('T', [0])], 1)

    def test_gate_outside_bits(self):
        with raises(InvalidPlacement):
            compile_single_step([('CX', [0, 5])], 2)


class TestToffoliAnalysis(TestNetworksMixin):
    def test_distribution(self):
        analysis = toffoli_outcome_analysis(builtin('toffoli'))
        expected = self.expected['toffoli']
        assert analysis.distribution == {int(steps): count for steps, count in expected['distribution'].items()}
        assert analysis.mean == expected['mean']
        assert analysis.outcomes == expected['outcomes']
        assert len(analysis.branches) == 8

    def test_shared_block_costs_more(self):
        analysis = toffoli_outcome_analysis(builtin('toffoli-shared'))
        assert analysis.distribution == {0: 1, 1: 2, 2: 4, 3: 1}
        assert analysis.mean == '7/4'

    def test_network_without_gate_corrections(self):
        with raises(WrongNetwork):
            toffoli_outcome_analysis(builtin('teleport'))


class TestFaultInjection(TestNetworksMixin):
    def test_transversal_cx(self):
        report = inject_faults(builtin('transversal-cx'), self.steane)
        assert report.passed
        assert report.locations == 7 * 2 * 2 * 3
        assert report.worst == {'C': 1, 'T': 1}

    @mark.parametrize('net', [builtin('teleport'), builtin('transfer-out')])
    def test_teleports_pass(self, net):
        assert inject_faults(net, self.steane).passed

    def test_hand_written_teleport(self):
        report = inject_faults(self.networks['teleport-k1'], self.steane)
        assert report.passed
        assert report.locations == 2 * 7 * 2 * 2 * 3

    def test_intrablock_cx_fails(self):
        report = inject_faults(self.networks['intrablock-cx'], self.steane)
        assert not report.passed
        assert report.worst == {'B': 2}
        assert report.witness == 'step=1 gate=CX B.0 B.1 before qubit=B.0 fault=X weights=[2]'

    def test_cat_measurement_has_no_physical_form(self):
        with raises(LevelMismatch):
            inject_faults(builtin('toffoli'), self.steane)
