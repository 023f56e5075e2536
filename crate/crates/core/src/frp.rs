//! A small arrowized FRP kernel.
//!
//! A [`SignalFunction`] is a stateful stream transformer that is advanced one
//! sample at a time. Signals are only ever observed at sample points, each
//! carrying the [`TimeDelta`] since the previous sample. Signal functions are
//! assembled from a closed set of combinators:
//!
//! * [`lift_pure`] turns a pure function into a signal function,
//! * [`compose`] pipes one signal function into another within the same step,
//! * [`fanout`] feeds one input to two signal functions and pairs the outputs,
//! * [`identity`] and [`constant`],
//! * [`delay_one`] emits its initial value and then every input one step late,
//! * [`feedback`] threads state from one step to the next through a built-in
//!   unit delay, so a loop can never depend on its own current output.
//!
//! ```
//! use reactive_platoon::frp::{self, SignalFunction, SignalFunctionExt, TimeDelta};
//!
//! let dt = TimeDelta::new(0.02).unwrap();
//! let mut sf = frp::delay_one(0).then(frp::lift_pure(|x: i32| x + 1));
//! assert_eq!(sf.step(dt, 5), 1);
//! assert_eq!(sf.step(dt, 6), 6);
//! ```

use std::fmt;
use std::marker::PhantomData;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum FrpError {
    #[error("time step must be positive and finite, got {0}")]
    NonPositiveStep(f64),
}

/// Width of one sampling interval, in seconds. Always positive and finite.
#[derive(Clone, Copy, PartialEq, PartialOrd)]
pub struct TimeDelta(f64);

impl TimeDelta {
    pub fn new(seconds: f64) -> Result<Self, FrpError> {
        if seconds.is_finite() && seconds > 0.0 {
            Ok(TimeDelta(seconds))
        } else {
            Err(FrpError::NonPositiveStep(seconds))
        }
    }

    pub fn seconds(self) -> f64 {
        self.0
    }
}

impl fmt::Debug for TimeDelta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}s", self.0)
    }
}

/// A stream transformer advanced one sample at a time.
///
/// `step` mutates only the transformer's own state: calling it on two
/// transformers in the same state with the same `(dt, input)` yields the same
/// output and leaves both in the same state.
pub trait SignalFunction<A, B> {
    fn step(&mut self, dt: TimeDelta, input: A) -> B;
}

impl<A, B, S: SignalFunction<A, B> + ?Sized> SignalFunction<A, B> for Box<S> {
    fn step(&mut self, dt: TimeDelta, input: A) -> B {
        (**self).step(dt, input)
    }
}

/// Method-style access to the binary combinators.
pub trait SignalFunctionExt<A, B>: SignalFunction<A, B> + Sized {
    /// `self` followed by `next`, see [`compose`].
    fn then<C, S>(self, next: S) -> Compose<Self, S, B>
    where
        S: SignalFunction<B, C>,
    {
        compose(self, next)
    }

    /// See [`fanout`].
    fn fanout<C, S>(self, other: S) -> Fanout<Self, S>
    where
        A: Clone,
        S: SignalFunction<A, C>,
    {
        fanout(self, other)
    }

    fn boxed(self) -> Box<dyn SignalFunction<A, B> + Send>
    where
        Self: Send + 'static,
    {
        Box::new(self)
    }
}

impl<A, B, S: SignalFunction<A, B>> SignalFunctionExt<A, B> for S {}

#[derive(Clone)]
pub struct Lift<F> {
    f: F,
}

impl<A, B, F: Fn(A) -> B> SignalFunction<A, B> for Lift<F> {
    fn step(&mut self, _dt: TimeDelta, input: A) -> B {
        (self.f)(input)
    }
}

/// Lifts a pure function to the signal level: every output sample is `f`
/// applied to the matching input sample.
pub fn lift_pure<A, B, F: Fn(A) -> B>(f: F) -> Lift<F> {
    Lift { f }
}

pub struct Compose<S1, S2, B> {
    first: S1,
    second: S2,
    _mid: PhantomData<fn() -> B>,
}

impl<S1: Clone, S2: Clone, B> Clone for Compose<S1, S2, B> {
    fn clone(&self) -> Self {
        Compose {
            first: self.first.clone(),
            second: self.second.clone(),
            _mid: PhantomData,
        }
    }
}

impl<A, B, C, S1, S2> SignalFunction<A, C> for Compose<S1, S2, B>
where
    S1: SignalFunction<A, B>,
    S2: SignalFunction<B, C>,
{
    fn step(&mut self, dt: TimeDelta, input: A) -> C {
        let mid = self.first.step(dt, input);
        self.second.step(dt, mid)
    }
}

/// Sequential composition. The output of `first` is fed into `second` in the
/// same step, with no added latency.
pub fn compose<A, B, C, S1, S2>(first: S1, second: S2) -> Compose<S1, S2, B>
where
    S1: SignalFunction<A, B>,
    S2: SignalFunction<B, C>,
{
    Compose {
        first,
        second,
        _mid: PhantomData,
    }
}

#[derive(Clone)]
pub struct Fanout<L, R> {
    left: L,
    right: R,
}

impl<A: Clone, B, C, L, R> SignalFunction<A, (B, C)> for Fanout<L, R>
where
    L: SignalFunction<A, B>,
    R: SignalFunction<A, C>,
{
    fn step(&mut self, dt: TimeDelta, input: A) -> (B, C) {
        let b = self.left.step(dt, input.clone());
        let c = self.right.step(dt, input);
        (b, c)
    }
}

/// Runs both branches on the same sample and time step and pairs their
/// outputs.
pub fn fanout<A: Clone, B, C, L, R>(left: L, right: R) -> Fanout<L, R>
where
    L: SignalFunction<A, B>,
    R: SignalFunction<A, C>,
{
    Fanout { left, right }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl<A> SignalFunction<A, A> for Identity {
    fn step(&mut self, _dt: TimeDelta, input: A) -> A {
        input
    }
}

pub fn identity() -> Identity {
    Identity
}

#[derive(Debug, Clone)]
pub struct Constant<B> {
    value: B,
}

impl<A, B: Clone> SignalFunction<A, B> for Constant<B> {
    fn step(&mut self, _dt: TimeDelta, _input: A) -> B {
        self.value.clone()
    }
}

pub fn constant<B: Clone>(value: B) -> Constant<B> {
    Constant { value }
}

/// Unit delay. Holds the most recent input until the next step.
#[derive(Debug, Clone)]
pub struct DelayOne<A> {
    held: A,
}

impl<A> DelayOne<A> {
    pub fn held(&self) -> &A {
        &self.held
    }
}

impl<A> SignalFunction<A, A> for DelayOne<A> {
    fn step(&mut self, _dt: TimeDelta, input: A) -> A {
        std::mem::replace(&mut self.held, input)
    }
}

/// Emits `initial` at step 0 and the input of step `n - 1` at step `n`.
pub fn delay_one<A>(initial: A) -> DelayOne<A> {
    DelayOne { held: initial }
}

pub struct Feedback<St, Body, A, B> {
    state: St,
    body: Body,
    _io: PhantomData<fn(A) -> B>,
}

impl<St: Clone, Body: Clone, A, B> Clone for Feedback<St, Body, A, B> {
    fn clone(&self) -> Self {
        Feedback {
            state: self.state.clone(),
            body: self.body.clone(),
            _io: PhantomData,
        }
    }
}

impl<St: Clone, Body, A, B> SignalFunction<A, B> for Feedback<St, Body, A, B>
where
    Body: SignalFunction<(A, St), (B, St)>,
{
    fn step(&mut self, dt: TimeDelta, input: A) -> B {
        let (out, next) = self.body.step(dt, (input, self.state.clone()));
        self.state = next;
        out
    }
}

/// Closes a loop around `body`. The state input at step 0 is `initial`; at
/// step `n` it is the state output of step `n - 1`.
pub fn feedback<St, Body, A, B>(initial: St, body: Body) -> Feedback<St, Body, A, B>
where
    St: Clone,
    Body: SignalFunction<(A, St), (B, St)>,
{
    Feedback {
        state: initial,
        body,
        _io: PhantomData,
    }
}

/// Advances `sf` by one sample and hands back the output together with the
/// successor transformer.
pub fn step<A, B, S>(mut sf: S, dt: f64, input: A) -> Result<(B, S), FrpError>
where
    S: SignalFunction<A, B>,
{
    let dt = TimeDelta::new(dt)?;
    let out = sf.step(dt, input);
    Ok((out, sf))
}

/// A finite sampled signal: `(dt, value)` pairs with every `dt` positive.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStream<A> {
    samples: Vec<(TimeDelta, A)>,
}

impl<A> SampleStream<A> {
    pub fn new() -> Self {
        SampleStream {
            samples: Vec::new(),
        }
    }

    pub fn from_pairs<I>(pairs: I) -> Result<Self, FrpError>
    where
        I: IntoIterator<Item = (f64, A)>,
    {
        let samples = pairs
            .into_iter()
            .map(|(dt, a)| Ok((TimeDelta::new(dt)?, a)))
            .collect::<Result<Vec<_>, FrpError>>()?;
        Ok(SampleStream { samples })
    }

    /// Every sample spaced by the same `dt`.
    pub fn uniform<I>(dt: TimeDelta, values: I) -> Self
    where
        I: IntoIterator<Item = A>,
    {
        SampleStream {
            samples: values.into_iter().map(|a| (dt, a)).collect(),
        }
    }

    pub fn push(&mut self, dt: TimeDelta, value: A) {
        self.samples.push((dt, value));
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dts(&self) -> impl Iterator<Item = TimeDelta> + '_ {
        self.samples.iter().map(|(dt, _)| *dt)
    }

    pub fn values(&self) -> impl Iterator<Item = &A> + '_ {
        self.samples.iter().map(|(_, a)| a)
    }

    pub fn iter(&self) -> impl Iterator<Item = &(TimeDelta, A)> + '_ {
        self.samples.iter()
    }
}

impl<A> Default for SampleStream<A> {
    fn default() -> Self {
        Self::new()
    }
}

impl<A> IntoIterator for SampleStream<A> {
    type Item = (TimeDelta, A);
    type IntoIter = std::vec::IntoIter<(TimeDelta, A)>;

    fn into_iter(self) -> Self::IntoIter {
        self.samples.into_iter()
    }
}

impl<A> FromIterator<(TimeDelta, A)> for SampleStream<A> {
    fn from_iter<I: IntoIterator<Item = (TimeDelta, A)>>(iter: I) -> Self {
        SampleStream {
            samples: iter.into_iter().collect(),
        }
    }
}

/// Folds `step` over the stream. The output has one sample per input sample.
pub fn run<A, B, S>(sf: &mut S, stream: SampleStream<A>) -> Vec<B>
where
    S: SignalFunction<A, B> + ?Sized,
{
    stream.into_iter().map(|(dt, a)| sf.step(dt, a)).collect()
}
