# -*- coding: utf-8 -*-
# Copyright (c) The anxietysense project
# This code is distributed under the two-clause BSD License.


"""Declarative stage tracking for analysis runs.

A run moves through a fixed set of states; each stage of the pipeline is a
transition, only available from its source states. Performed transitions are
logged and kept in the run history, which ends up in the run manifest.
"""

import logging
import re

from .base import AnxietySenseError


class InvalidTransitionError(AnxietySenseError):
    """Raised when trying to perform a transition not available from current state."""


class State(object):
    """A state within a workflow.

    Attributes:
        name (str): the name of the state
        title (str): the human-readable title for the state
    """
    STATE_NAME_RE = re.compile(r'\w+$')

    def __init__(self, name, title):
        if not self.STATE_NAME_RE.match(name):
            raise ValueError('Invalid state name %s.' % name)
        self.name = name
        self.title = title

    def __str__(self):
        return self.name

    def __repr__(self):
        return '<%s: %r>' % (self.__class__.__name__, self.name)


class StateList(object):
    """An ordered collection of states, indexable by name."""

    def __init__(self, states):
        self._states = dict((st.name, st) for st in states)
        self._order = tuple(st.name for st in states)

    def __getattr__(self, name):
        try:
            return self.__dict__['_states'][name]
        except KeyError:
            raise AttributeError('StateList %s has no state named %s' % (self, name))

    def __len__(self):
        return len(self._states)

    def __getitem__(self, name_or_state):
        if isinstance(name_or_state, State):
            return self._states[name_or_state.name]
        return self._states[name_or_state]

    def __iter__(self):
        for name in self._order:
            yield self._states[name]

    def __contains__(self, state):
        if isinstance(state, State):
            return state.name in self._states and self._states[state.name] is state
        return state in self._states

    def __repr__(self):
        return '%s(%r)' % (self.__class__.__name__, self._order)


class Transition(object):
    """A transition.

    Attributes:
        name (str): the name of the Transition
        source (State list): the 'source' states of the transition
        target (State): the 'target' state of the transition
    """

    def __init__(self, name, source, target):
        self.name = name
        if isinstance(source, State):
            source = [source]
        self.source = list(source)
        self.target = target

    def __repr__(self):
        return '%s(%r, %r, %r)' % (self.__class__.__name__, self.name, self.source, self.target)


class TransitionList(object):
    """Holder for the transitions of a given workflow."""

    def __init__(self, transitions):
        self._transitions = dict((tr.name, tr) for tr in transitions)
        self._order = [tr.name for tr in transitions]

    def __len__(self):
        return len(self._transitions)

    def __getitem__(self, name):
        return self._transitions[name]

    def __iter__(self):
        for name in self._order:
            yield self._transitions[name]

    def __contains__(self, value):
        if isinstance(value, Transition):
            return self._transitions.get(value.name) is value
        return value in self._transitions

    def available_from(self, state):
        """Retrieve all transitions available from a given state.

        Args:
            state (State): the initial state.

        Yields:
            Transition: all transitions starting from that state
        """
        for tr in self:
            if state in tr.source:
                yield tr


def _setup_states(state_definitions):
    states = []
    for state_def in state_definitions:
        if len(state_def) != 2:
            raise TypeError(
                "The 'states' attribute of a workflow should hold "
                "two-tuples of strings; got %r instead." % (state_def,))
        states.append(State(*state_def))
    return StateList(states)


def _setup_transitions(tdef, states):
    transitions = []
    for trdef in tdef:
        if len(trdef) != 3:
            raise TypeError(
                "Elements of the 'transitions' attribute of a "
                "workflow should be three-tuples; got %r instead." % (trdef,))
        name, source, target = trdef
        if isinstance(source, str):
            source = [source]
        transitions.append(Transition(name, [states[src] for src in source], states[target]))
    return TransitionList(transitions)


class Workflow(object):
    """Base class for run workflows.

    Subclasses declare ``states`` as (name, title) pairs, ``transitions`` as
    (name, source name(s), target name) triples and an ``initial_state`` name;
    those are turned into StateList / TransitionList objects at class creation.
    """
    states = ()
    transitions = ()
    initial_state = None

    logger_name = 'anxietysense.runflow'

    def __init_subclass__(cls, **kwargs):
        super().__init_subclass__(**kwargs)
        if 'states' in cls.__dict__:
            cls.states = _setup_states(cls.states)
        if 'transitions' in cls.__dict__:
            cls.transitions = _setup_transitions(cls.transitions, cls.states)
        if isinstance(cls.initial_state, str):
            cls.initial_state = cls.states[cls.initial_state]

    def log_transition(self, transition, from_state, instance):
        """Log a performed transition.

        Args:
            transition (Transition): the performed transition
            from_state (State): the source state
            instance (object): the modified object
        """
        logging.getLogger(self.logger_name).info(
            "%r performed transition %s.%s (%s -> %s)", instance,
            self.__class__.__name__, transition.name, from_state.name, transition.target.name)


class transition(object):
    """Declare a method as the implementation of a workflow transition.

    Usage:
        >>> class Run(WorkflowEnabled):
        ...     workflow = MyWorkflow()
        ...
        ...     @transition()
        ...     def load(self, path):
        ...         ...
    """

    def __init__(self, trname=''):
        if callable(trname):
            raise ValueError(
                "The @transition decorator should be called as "
                "@transition() or @transition('transition_name')")
        self.trname = trname
        self.func = None

    def __call__(self, func):
        self.func = func
        if not self.trname:
            self.trname = func.__name__
        self.__doc__ = func.__doc__
        return self

    def __get__(self, instance, owner):
        if instance is None:
            return self

        def run_transition(*args, **kwargs):
            return instance._perform(self.trname, self.func, *args, **kwargs)

        run_transition.__doc__ = self.__doc__
        run_transition.__name__ = self.trname
        return run_transition

    def __repr__(self):
        return "<%s for %r: %s>" % (self.__class__.__name__, self.trname, self.func)


class WorkflowEnabled(object):
    """Base class for objects whose lifecycle follows a Workflow.

    Subclasses set ``workflow`` to a Workflow instance. Instances expose
    ``state`` (the current State) and ``history``, a list of dicts describing
    each performed transition.
    """
    workflow = None

    def __init__(self):
        self.state = self.workflow.initial_state
        self.history = []

    def is_available(self, trname):
        """Whether a transition may be performed from the current state."""
        return self.state in self.workflow.transitions[trname].source

    def _perform(self, trname, func, *args, **kwargs):
        tr = self.workflow.transitions[trname]
        if self.state not in tr.source:
            raise InvalidTransitionError(
                "Transition '%s' isn't available from state '%s'." % (tr.name, self.state.name))
        result = func(self, *args, **kwargs)
        from_state = self.state
        self.state = tr.target
        self.history.append({
            'transition': tr.name,
            'from': from_state.name,
            'to': tr.target.name,
        })
        self.workflow.log_transition(tr, from_state, self)
        return result
