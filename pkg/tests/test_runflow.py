# -*- coding: utf-8 -*-
# Copyright (c) The anxietysense project
# This code is distributed under the two-clause BSD License.

import unittest

from anxietysense import runflow


class StateTestCase(unittest.TestCase):

    def test_definition(self):
        self.assertRaises(ValueError, runflow.State, 'a--b', 'A--B')

    def test_equality(self):
        self.assertNotEqual(runflow.State('foo', 'Foo'), runflow.State('foo', 'Foo'))

    def test_repr(self):
        a = runflow.State('foo', 'Foo')
        self.assertIn('foo', repr(a))
        self.assertNotIn('Foo', repr(a))


class StateListTestCase(unittest.TestCase):

    def setUp(self):
        self.foo = runflow.State('foo', 'Foo')
        self.bar = runflow.State('bar', 'Bar')
        self.bar2 = runflow.State('bar', 'Bar')
        self.sl = runflow.StateList([self.foo, self.bar])

    def test_access(self):
        self.assertEqual(self.foo, self.sl.foo)
        self.assertEqual(self.foo, self.sl['foo'])
        self.assertFalse(hasattr(self.sl, 'baz'))

    def test_contains(self):
        self.assertIn(self.foo, self.sl)
        self.assertIn('foo', self.sl)
        self.assertNotIn(self.bar2, self.sl)
        self.assertNotIn('bar2', self.sl)

    def test_order(self):
        self.assertEqual(['foo', 'bar'], [st.name for st in self.sl])
        self.assertEqual(2, len(self.sl))


class TransitionListTestCase(unittest.TestCase):

    def setUp(self):
        self.foo = runflow.State('foo', 'Foo')
        self.bar = runflow.State('bar', 'Bar')
        self.baz = runflow.State('baz', 'Baz')
        self.foobar = runflow.Transition('foobar', self.foo, self.bar)
        self.foobar2 = runflow.Transition('foobar', self.foo, self.bar)
        self.gobaz = runflow.Transition('gobaz', [self.foo, self.bar], self.baz)
        self.tl = runflow.TransitionList([self.foobar, self.gobaz])

    def test_contains(self):
        self.assertIn(self.foobar, self.tl)
        self.assertIn('gobaz', self.tl)
        self.assertNotIn(self.foobar2, self.tl)

    def test_available_from(self):
        self.assertEqual([self.foobar, self.gobaz], list(self.tl.available_from(self.foo)))
        self.assertEqual([self.gobaz], list(self.tl.available_from(self.bar)))
        self.assertEqual([], list(self.tl.available_from(self.baz)))


class PipelineWorkflow(runflow.Workflow):
    states = (
        ('new', "New"),
        ('ready', "Ready"),
        ('done', "Done"),
    )
    transitions = (
        ('prepare', 'new', 'ready'),
        ('process', ('ready', 'done'), 'done'),
    )
    initial_state = 'new'


class Pipeline(runflow.WorkflowEnabled):
    workflow = PipelineWorkflow()

    def __init__(self):
        super().__init__()
        self.calls = []

    @runflow.transition()
    def prepare(self, value):
        self.calls.append(value)
        return value * 2

    @runflow.transition('process')
    def run_step(self):
        self.calls.append('process')

    @runflow.transition()
    def prepare_broken(self):
        raise KeyError('nope')


class WorkflowDeclarationTestCase(unittest.TestCase):

    def test_declaration(self):
        self.assertEqual(3, len(PipelineWorkflow.states))
        self.assertEqual(2, len(PipelineWorkflow.transitions))
        self.assertEqual(PipelineWorkflow.states.new, PipelineWorkflow.initial_state)
        self.assertEqual([PipelineWorkflow.states.ready, PipelineWorkflow.states.done],
                         PipelineWorkflow.transitions['process'].source)

    def test_subclass_keeps_states(self):
        class LateStart(PipelineWorkflow):
            initial_state = 'ready'

        self.assertEqual(3, len(LateStart.states))
        self.assertEqual('ready', LateStart.initial_state.name)

    def test_invalid_definitions(self):
        def bad_states():
            class Broken(runflow.Workflow):
                states = (12, 13)
                initial_state = 12

        def bad_transitions():
            class Broken(runflow.Workflow):
                states = (('a', 'A'),)
                transitions = (('go', 'a'),)
                initial_state = 'a'

        self.assertRaises(TypeError, bad_states)
        self.assertRaises(TypeError, bad_transitions)

    def test_decorator_requires_call(self):
        with self.assertRaises(ValueError) as cm:
            runflow.transition(lambda self: None)
        self.assertIn("@transition() or @transition('transition_name')", str(cm.exception))


class WorkflowEnabledTestCase(unittest.TestCase):

    def test_perform(self):
        pipeline = Pipeline()
        self.assertEqual('new', pipeline.state.name)
        self.assertEqual(6, pipeline.prepare(3))
        self.assertEqual('ready', pipeline.state.name)
        pipeline.run_step()
        pipeline.run_step()
        self.assertEqual('done', pipeline.state.name)
        self.assertEqual([3, 'process', 'process'], pipeline.calls)

    def test_history(self):
        pipeline = Pipeline()
        pipeline.prepare(1)
        pipeline.run_step()
        self.assertEqual([
            {'transition': 'prepare', 'from': 'new', 'to': 'ready'},
            {'transition': 'process', 'from': 'ready', 'to': 'done'},
        ], pipeline.history)

    def test_unavailable_transition(self):
        pipeline = Pipeline()
        self.assertFalse(pipeline.is_available('process'))
        self.assertRaises(runflow.InvalidTransitionError, pipeline.run_step)
        self.assertEqual('new', pipeline.state.name)
        self.assertEqual([], pipeline.history)

    def test_failure_keeps_state(self):
        class BrokenWorkflow(PipelineWorkflow):
            transitions = (('prepare_broken', 'new', 'ready'),)

        class Broken(Pipeline):
            workflow = BrokenWorkflow()

        broken = Broken()
        self.assertRaises(KeyError, broken.prepare_broken)
        self.assertEqual('new', broken.state.name)
        self.assertEqual([], broken.history)

    def test_logging(self):
        pipeline = Pipeline()
        with self.assertLogs('anxietysense.runflow', level='INFO') as logs:
            pipeline.prepare(1)
        self.assertIn('PipelineWorkflow.prepare (new -> ready)', logs.output[0])


if __name__ == '__main__':  # pragma: no cover
    unittest.main()
