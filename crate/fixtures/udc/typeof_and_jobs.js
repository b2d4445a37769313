var jobs = new Map();
app.get('/job', (req, res) => {
  log("job requested");
  var job = jobs.get(req.name);
  (typeof job === 'function') && job(req.body);
  res.end();
});
