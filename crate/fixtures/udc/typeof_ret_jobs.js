var jobs = new Map();
app.get('/job', (req, res) => {
  log("job requested");
  var job = jobs.get(req.name);
  if (typeof job !== 'function') return;
  job(req.body);
  res.end();
});
